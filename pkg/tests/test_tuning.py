import math

import numpy as np
import pytest

from gelato import tuning
from gelato.core import DataSet, standardize
from gelato.exceptions import ConfigError, MleNonexistenceError, TuningFailureError
from gelato.lasso import coefficient_matrix, nodewise_regressions
from gelato.simulate import gen_ar1_block, sample_gaussian


def test_grid_values():
    cfg = tuning.make_grids(300, 40)
    assert len(cfg.lambda_grid) == 10 and len(cfg.tau_grid) == 10
    base = math.sqrt(math.log(300) / 40)
    assert base == pytest.approx(0.37762, abs=5e-6)
    assert cfg.lambda_grid[5] == pytest.approx(base, rel=1e-15)  # A = 1
    assert cfg.lambda_grid[0] == pytest.approx(0.0037762, abs=5e-8)  # A = 0.01
    assert cfg.tau_grid[5] == pytest.approx(0.75 * base, rel=1e-15)


def test_grid_validation():
    with pytest.raises(ConfigError):
        tuning.TuningConfig(lambda_grid=(0.2, 0.1), tau_grid=(0.1,))
    with pytest.raises(ConfigError):
        tuning.TuningConfig(lambda_grid=(0.0, 0.1), tau_grid=(0.1,))
    with pytest.raises(ConfigError):
        tuning.TuningConfig(lambda_grid=(0.1,), tau_grid=(0.1,), folds=1)
    with pytest.raises(ConfigError):
        tuning.TuningConfig(lambda_grid=(0.1,), tau_grid=(0.1,), folds=10).check_sample_size(5)


def test_theoretical_parameters():
    lam, tau = tuning.theoretical_parameters(60, 320)
    assert lam == pytest.approx(2 * math.sqrt(2 * math.log(60) / 320))
    assert tau == pytest.approx(lam)
    lam, tau = tuning.theoretical_parameters(60, 320, d0=1.0, D4=0.5)
    assert tau == pytest.approx(0.5 * lam)


def test_fold_indices_partition():
    folds = tuning.fold_indices(23, 10, seed=4)
    sizes = [len(f) for f in folds]
    assert sizes == [3, 3, 3] + [2] * 7
    allrows = np.concatenate(folds)
    assert sorted(allrows.tolist()) == list(range(23))
    again = tuning.fold_indices(23, 10, seed=4)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))


def test_split_uses_training_statistics():
    rng = np.random.default_rng(0)
    data = DataSet(rng.standard_normal((20, 3)) * 4 + 1)
    for fold in tuning._split(data, 4, seed=1):
        assert np.all(np.abs(fold.train.values.mean(axis=0)) < 1e-12)
        # held-out rows are not re-centred on themselves
        assert fold.test.shape == (5, 3)


def test_single_value_grids_returned():
    rng = np.random.default_rng(1)
    data = standardize(DataSet(rng.standard_normal((30, 4))))
    cfg = tuning.TuningConfig(lambda_grid=(0.3,), tau_grid=(0.2,), folds=5)
    assert tuning.cv_lambda(data, cfg) == 0.3
    assert tuning.cv_tau(data, 0.3, cfg) == 0.2


def test_argmin_prefers_larger_on_ties():
    assert tuning._argmin_prefer_larger([1, 2, 3], [0.5, 0.2, 0.2]) == 2
    assert tuning._argmin_prefer_larger([1, 2, 3], [0.1, 0.2, 0.2]) == 0


def test_identity_scores_trace():
    rng = np.random.default_rng(2)
    z = standardize(DataSet(rng.standard_normal((200, 6)))).values
    s_out = z.T @ z / 200
    assert tuning.heldout_score(np.eye(6), s_out) == pytest.approx(6.0, abs=1e-12)


def test_selected_values_are_argmins():
    sigma, _ = gen_ar1_block(10, 5, 0.8)
    data = sample_gaussian(sigma, 80, 3)
    cfg = tuning.make_grids(10, 80, folds=5, seed=3)
    res = tuning.tune(data, cfg)
    assert res.lambda_n in cfg.lambda_grid and res.tau in cfg.tau_grid
    assert res.lambda_scores[cfg.lambda_grid.index(res.lambda_n)] == np.min(res.lambda_scores)
    assert res.tau_scores[cfg.tau_grid.index(res.tau)] == np.min(res.tau_scores)
    again = tuning.tune(data, cfg)
    assert (again.lambda_n, again.tau) == (res.lambda_n, res.tau)
    np.testing.assert_array_equal(again.tau_scores, res.tau_scores)


def test_lambda_scores_match_direct_computation():
    sigma, _ = gen_ar1_block(6, 6, 0.7)
    data = sample_gaussian(sigma, 40, 5)
    cfg = tuning.TuningConfig(lambda_grid=(0.05, 0.3), tau_grid=(0.1,), folds=4, seed=2)
    scores = tuning.lambda_cv_scores(data, cfg)
    expect = np.zeros(2)
    for fold in tuning._split(data, 4, 2):
        for k, lam in enumerate(cfg.lambda_grid):
            B = coefficient_matrix(nodewise_regressions(fold.train, lam))
            r = fold.test - fold.test @ B.T
            expect[k] += np.sum(np.mean(r**2, axis=0))
    # warm starts agree with cold fits up to the solver tolerance
    np.testing.assert_allclose(scores, expect / 4, rtol=1e-7)


def test_tau_cv_selected_beats_tau_zero():
    sigma, _ = gen_ar1_block(30, 30, 0.9)
    data = sample_gaussian(sigma, 320, 9)
    grid = tuning.make_grids(30, 320, folds=5, seed=9)
    cfg = tuning.TuningConfig(
        lambda_grid=grid.lambda_grid, tau_grid=(1e-9,) + grid.tau_grid, folds=5, seed=9
    )
    lam = grid.lambda_grid[5]
    scores = tuning.tau_cv_scores(data, lam, cfg)
    chosen = tuning.cv_tau(data, lam, cfg)
    assert scores[cfg.tau_grid.index(chosen)] <= scores[0]


def test_failed_mle_scores_infinite(monkeypatch):
    def boom(*a, **k):
        raise MleNonexistenceError("forced")

    monkeypatch.setattr(tuning, "fit_constrained_mle", boom)
    rng = np.random.default_rng(3)
    data = standardize(DataSet(rng.standard_normal((20, 3))))
    cfg = tuning.TuningConfig(lambda_grid=(0.1,), tau_grid=(0.1, 0.2), folds=4)
    assert np.all(np.isinf(tuning.tau_cv_scores(data, 0.1, cfg)))
    with pytest.raises(TuningFailureError):
        tuning.cv_tau(data, 0.1, cfg)


@pytest.mark.slow
def test_noise_prefers_heavy_penalty():
    p, n = 10, 100
    upper = 0
    for seed in range(10):
        data = sample_gaussian(np.eye(p), n, seed)
        cfg = tuning.make_grids(p, n, seed=seed)
        upper += tuning.cv_lambda(data, cfg) >= cfg.lambda_grid[5]
    assert upper >= 8


@pytest.mark.slow
def test_strong_signal_prefers_light_penalty():
    p, n = 20, 320
    sigma, _ = gen_ar1_block(p, p, 0.9)
    lower = 0
    for seed in range(10):
        cfg = tuning.make_grids(p, n, seed=seed)
        lower += tuning.cv_lambda(sample_gaussian(sigma, n, seed), cfg) < cfg.lambda_grid[5]
    assert lower >= 8
