"""Structured covariance models and a seeded multivariate Gaussian sampler.

Random numbers come from numpy's PCG64 bit generator.  Seeds are passed as
integers or ``numpy.random.SeedSequence`` objects; :func:`replicate_seed`
derives independent per-replicate streams from a master seed, so results do
not depend on the order in which replicates run.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import core
from .core import COVARIANCE, PRECISION, DataSet, SymMatrix, standardize
from .exceptions import ConfigError, DegenerateDataError, DegenerateDrawError

FAMILIES = ("ar1_block", "random_precision", "exp_decay")


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def replicate_seed(master: int, *key: int) -> np.random.SeedSequence:
    """Independent stream for ``key`` (e.g. ``(n, replicate)``) under ``master``."""
    return np.random.SeedSequence([int(master), *map(int, key)])


@dataclass(frozen=True)
class ModelSpec:
    family: str
    p: int
    block_size: int | None = None
    rho: float = 0.9
    pi: float | None = None
    entry_value: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        if self.p < 2:
            raise ConfigError("p must be at least 2")
        if self.family == "ar1_block":
            bs = self.p if self.block_size is None else self.block_size
            if bs < 1 or self.p % bs:
                raise ConfigError(f"block_size {bs} does not divide p={self.p}")
            if not 0 < self.rho < 1:
                raise ConfigError("rho must lie in (0, 1)")
        if self.family == "random_precision" and not (self.pi is not None and 0 < self.pi <= 1):
            raise ConfigError("random_precision needs 0 < pi <= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "ModelSpec":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown model fields: {sorted(unknown)}")
        return cls(**known)

    def build(self) -> tuple[SymMatrix, SymMatrix]:
        """``(sigma0, theta0)`` for this spec."""
        if self.family == "ar1_block":
            return gen_ar1_block(self.p, self.block_size or self.p, self.rho)
        if self.family == "random_precision":
            return gen_random_precision(self.p, self.pi, self.entry_value, self.seed)
        return gen_exp_decay(self.p)


def _ar1(size, rho):
    idx = np.arange(size)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _ar1_precision(size, rho):
    # closed-form tridiagonal inverse, so the zeros are exact
    if size == 1:
        return np.ones((1, 1))
    c = 1.0 / (1.0 - rho * rho)
    t = np.diag(np.full(size, (1.0 + rho * rho) * c))
    t[0, 0] = t[-1, -1] = c
    i = np.arange(size - 1)
    t[i, i + 1] = t[i + 1, i] = -rho * c
    return t


def gen_ar1_block(p: int, block_size: int, rho: float = 0.9):
    """Block-diagonal covariance with ``rho**|i-j|`` inside each block."""
    if block_size < 1 or p % block_size:
        raise ConfigError(f"block_size {block_size} does not divide p={p}")
    block = _ar1(block_size, rho)
    block_inv = _ar1_precision(block_size, rho)
    sigma = np.zeros((p, p))
    theta = np.zeros((p, p))
    for start in range(0, p, block_size):
        sl = slice(start, start + block_size)
        sigma[sl, sl] = block
        theta[sl, sl] = block_inv
    return SymMatrix(sigma, COVARIANCE), SymMatrix(theta, PRECISION)


def gen_random_precision(p: int, pi: float, entry_value: float = 0.5, seed=0):
    """``Theta0 = B + delta*I`` with sparse random ``B`` and condition number ``p``.

    Each unordered pair draws once: ``entry_value`` with probability ``pi``,
    else 0.  ``delta = (lmax(B) - p*lmin(B)) / (p - 1)``.
    """
    if not 0 < pi <= 1:
        raise ConfigError("pi must lie in (0, 1]")
    if p < 2:
        raise ConfigError("p must be at least 2")
    rng = make_rng(seed)
    iu = np.triu_indices(p, k=1)
    hits = rng.random(iu[0].size) < pi
    B = np.zeros((p, p))
    B[iu] = np.where(hits, entry_value, 0.0)
    B = B + B.T
    eig = np.linalg.eigvalsh(B)
    lmin, lmax = eig[0], eig[-1]
    if not lmax - lmin > 1e-12 * max(1.0, abs(entry_value)):
        raise DegenerateDrawError("B has a single eigenvalue (all-zero draw); reseed")
    delta = (lmax - p * lmin) / (p - 1)
    theta = B + delta * np.eye(p)
    return SymMatrix(core.inverse(theta).entries, COVARIANCE), SymMatrix(theta, PRECISION)


def gen_exp_decay(p: int):
    """``theta0[i, j] = exp(-2|i - j|)``."""
    if p < 2:
        raise ConfigError("p must be at least 2")
    idx = np.arange(p)
    theta = np.exp(-2.0 * np.abs(idx[:, None] - idx[None, :]))
    return SymMatrix(core.inverse(theta).entries, COVARIANCE), SymMatrix(theta, PRECISION)


def sample_raw(sigma0, n: int, seed) -> np.ndarray:
    """``n`` draws ``L z`` with ``L`` the Cholesky factor of ``sigma0``."""
    L = core.cholesky(sigma0).lower
    z = make_rng(seed).standard_normal((n, L.shape[0]))
    return z @ L.T


def sample_gaussian(sigma0, n: int, seed) -> DataSet:
    """Seeded ``N(0, sigma0)`` sample of size ``n``, standardized."""
    if n < 2:
        raise DegenerateDataError(f"cannot standardize a sample of size n={n}")
    return standardize(DataSet(sample_raw(sigma0, n, seed)))
