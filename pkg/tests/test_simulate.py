import math

import numpy as np
import pytest

from gelato import core, simulate
from gelato.exceptions import ConfigError, DegenerateDataError, DegenerateDrawError
from gelato.simulate import ModelSpec

from oracles import gauss_jordan_inverse, jacobi_eigenvalues


def test_ar1_two_by_two():
    sigma, theta = simulate.gen_ar1_block(2, 2, 0.9)
    np.testing.assert_array_equal(sigma.entries, [[1.0, 0.9], [0.9, 1.0]])
    np.testing.assert_allclose(theta.entries, gauss_jordan_inverse([[1.0, 0.9], [0.9, 1.0]]), atol=1e-12)


def test_ar1_block_size_one_is_identity():
    sigma, theta = simulate.gen_ar1_block(4, 1, 0.9)
    np.testing.assert_array_equal(sigma.entries, np.eye(4))
    np.testing.assert_array_equal(theta.entries, np.eye(4))


@pytest.mark.parametrize("p", [5, 20])
def test_ar1_inverse_tridiagonal(p):
    _, theta = simulate.gen_ar1_block(p, p, 0.9)
    i = np.arange(p)
    far = np.abs(i[:, None] - i[None, :]) >= 2
    assert np.max(np.abs(theta.entries[far])) < 1e-10


def test_ar1_blocks_exact_zeros_across():
    sigma, theta = simulate.gen_ar1_block(6, 3, 0.8)
    assert np.all(sigma.entries[:3, 3:] == 0.0)
    assert np.all(theta.entries[:3, 3:] == 0.0)


def test_ar1_bad_block():
    with pytest.raises(ConfigError):
        simulate.gen_ar1_block(5, 2)


def test_random_precision_two_by_two():
    sigma, theta = simulate.gen_random_precision(2, 1.0, 0.5, seed=0)
    np.testing.assert_allclose(theta.entries, [[1.5, 0.5], [0.5, 1.5]], atol=1e-14)
    ev = jacobi_eigenvalues(theta.entries)
    assert ev[-1] / ev[0] == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_random_precision_condition_and_diagonal(seed):
    _, theta = simulate.gen_random_precision(20, 0.1, 0.5, seed=seed)
    t = theta.entries
    off = t - np.diag(np.diag(t))
    assert np.all((off == 0.0) | (off == 0.5))
    ev = jacobi_eigenvalues(t)
    assert ev[-1] / ev[0] == pytest.approx(20.0, rel=1e-6)
    assert np.allclose(np.diag(t), t[0, 0])


def test_random_precision_all_zero_draw():
    with pytest.raises(DegenerateDrawError):
        simulate.gen_random_precision(3, 1e-12, 0.5, seed=0)


def test_exp_decay_entries():
    sigma, theta = simulate.gen_exp_decay(50)
    t = theta.entries
    assert np.all(np.diag(t) == 1.0)
    assert t[0, 1] == pytest.approx(math.exp(-2), rel=1e-15)
    assert t[0, 1] == pytest.approx(0.1353352832366127, rel=1e-15)
    np.testing.assert_array_equal(t, t.T)
    assert np.allclose(t[1:, 1:], t[:-1, :-1])  # Toeplitz
    core.cholesky(t)


@pytest.mark.parametrize(
    "build",
    [
        lambda: simulate.gen_ar1_block(12, 4, 0.9),
        lambda: simulate.gen_random_precision(15, 0.2, 0.5, seed=3),
        lambda: simulate.gen_exp_decay(15),
    ],
)
def test_generator_pairs_consistent(build):
    sigma, theta = build()
    p = sigma.p
    assert core.frobenius_diff(sigma.entries @ theta.entries, np.eye(p)) < 1e-8
    assert np.linalg.eigvalsh(sigma.entries)[0] > 0
    assert sigma.role == core.COVARIANCE and theta.role == core.PRECISION


def test_sample_gaussian_deterministic():
    sigma, _ = simulate.gen_ar1_block(5, 5, 0.5)
    a = simulate.sample_gaussian(sigma, 20, 42)
    b = simulate.sample_gaussian(sigma, 20, 42)
    assert a.values.tobytes() == b.values.tobytes()
    c = simulate.sample_gaussian(sigma, 20, 43)
    assert not np.array_equal(a.values, c.values)
    assert a.standardized


def test_sample_gaussian_law_of_large_numbers():
    x = simulate.sample_raw(np.eye(4), 50_000, 7)
    s = x.T @ x / x.shape[0]
    assert np.max(np.abs(s - np.eye(4))) < 0.05


def test_normal_source_sanity():
    z = simulate.make_rng(11).standard_normal(100_000)
    assert abs(z.mean()) < 0.02 and abs(z.var() - 1) < 0.05


def test_sample_gaussian_rejects_single_row():
    with pytest.raises(DegenerateDataError):
        simulate.sample_gaussian(np.eye(3), 1, 0)


def test_replicate_seeds_independent_of_order():
    a = simulate.make_rng(simulate.replicate_seed(5, 40, 1)).random(3)
    simulate.make_rng(simulate.replicate_seed(5, 40, 0)).random(3)
    b = simulate.make_rng(simulate.replicate_seed(5, 40, 1)).random(3)
    np.testing.assert_array_equal(a, b)
    c = simulate.make_rng(simulate.replicate_seed(5, 80, 1)).random(3)
    assert not np.array_equal(a, c)


def test_model_spec_validation_and_roundtrip():
    with pytest.raises(ConfigError):
        ModelSpec("banded", 10)
    with pytest.raises(ConfigError):
        ModelSpec("ar1_block", 10, block_size=3)
    with pytest.raises(ConfigError):
        ModelSpec("random_precision", 10)
    with pytest.raises(ConfigError):
        ModelSpec.from_dict({"family": "exp_decay", "p": 5, "colour": 1})
    spec = ModelSpec("random_precision", 10, pi=0.3, seed=2)
    assert ModelSpec.from_dict(spec.to_dict()) == spec
    s1, _ = spec.build()
    s2, _ = ModelSpec.from_dict(spec.to_dict()).build()
    np.testing.assert_array_equal(s1.entries, s2.entries)
