"""Sequential cross-validation of the penalty and the threshold.

The penalty is chosen first, by the held-out squared prediction error summed
over all nodewise regressions.  With the penalty fixed, the threshold is
chosen by the held-out Gaussian negative log-likelihood
``tr(Theta_hat @ S_out) - log|Theta_hat|``.

Folds are contiguous blocks of a seeded permutation of the rows; each
training fold is standardized on its own rows and the held-out rows are
transformed with the training statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import CORRELATION, COVARIANCE, DataSet, standardize
from .exceptions import ConfigError, NumericFailureError, TuningFailureError
from .graph import edges_from_fits
from .lasso import coefficient_matrix, gram_matrix, nodewise_from_gram
from .mle import fit_constrained_mle, refit_input
from .simulate import make_rng

DEFAULT_MULTIPLIERS = (0.01, 0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)
TAU_FACTOR = 0.75


def rate(p: int, n: int) -> float:
    """``sqrt(2 log p / n)``."""
    return math.sqrt(2.0 * math.log(p) / n)


def theoretical_parameters(p: int, n: int, d0: float = 2.0, D4: float = 1.0):
    """Rate-based ``(lambda_n, tau) = (d0 * rate, D4 * d0 * rate)``."""
    lam = d0 * rate(p, n)
    return lam, D4 * lam


@dataclass(frozen=True)
class TuningConfig:
    lambda_grid: tuple
    tau_grid: tuple
    folds: int = 10
    a_multipliers: tuple = DEFAULT_MULTIPLIERS
    b_multipliers: tuple = DEFAULT_MULTIPLIERS
    theoretical: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda_grid", "tau_grid"):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid:
                raise ConfigError(f"{name} is empty")
            if any(not v > 0 for v in grid):
                raise ConfigError(f"{name} must be strictly positive")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be sorted strictly ascending")
            object.__setattr__(self, name, grid)
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")

    def check_sample_size(self, n: int):
        if self.folds > n:
            raise ConfigError(f"folds={self.folds} exceeds n={n}")


def make_grids(
    p: int,
    n: int,
    a_multipliers=DEFAULT_MULTIPLIERS,
    b_multipliers=DEFAULT_MULTIPLIERS,
    folds: int = 10,
    seed: int = 0,
    theoretical=None,
) -> TuningConfig:
    """``lambda_k = A_k sqrt(log p / n)`` and ``tau_k = 0.75 B_k sqrt(log p / n)``."""
    if p < 2 or n < 2:
        raise ConfigError("p and n must be at least 2")
    base = math.sqrt(math.log(p) / n)
    a = tuple(sorted(float(v) for v in a_multipliers))
    b = tuple(sorted(float(v) for v in b_multipliers))
    return TuningConfig(
        lambda_grid=tuple(v * base for v in a),
        tau_grid=tuple(TAU_FACTOR * v * base for v in b),
        folds=folds,
        a_multipliers=a,
        b_multipliers=b,
        theoretical=theoretical,
        seed=seed,
    )


def fold_indices(n: int, folds: int, seed) -> list[np.ndarray]:
    """Held-out row indices per fold; the first ``n % folds`` folds get one extra row."""
    perm = make_rng(seed).permutation(n)
    base, extra = divmod(n, folds)
    out, start = [], 0
    for f in range(folds):
        size = base + (1 if f < extra else 0)
        out.append(np.sort(perm[start:start + size]))
        start += size
    return out


@dataclass
class _Fold:
    train: DataSet
    test: np.ndarray  # held-out rows on the training-standardized scale


def _split(data: DataSet, folds: int, seed) -> list[_Fold]:
    x = data.values
    n = x.shape[0]
    out = []
    for held in fold_indices(n, folds, seed):
        keep = np.ones(n, dtype=bool)
        keep[held] = False
        raw_train = DataSet(x[keep])
        train = standardize(raw_train)
        mean = x[keep].mean(axis=0)
        scale = train.column_scales
        out.append(_Fold(train, (x[held] - mean) / scale))
    return out


def _argmin_prefer_larger(grid, scores):
    best = None
    for k in range(len(grid) - 1, -1, -1):
        if best is None or scores[k] < scores[best]:
            best = k
    return best


def lambda_cv_scores(data: DataSet, config: TuningConfig) -> np.ndarray:
    """Summed (over nodes) mean held-out squared error for every grid value."""
    config.check_sample_size(data.n)
    grid = config.lambda_grid
    scores = np.zeros(len(grid))
    folds = _split(data, config.folds, config.seed)
    for fold in folds:
        G = gram_matrix(fold.train)
        z = fold.test
        B = None
        # decreasing penalties, each warm-started from the previous solution
        for k in range(len(grid) - 1, -1, -1):
            B = coefficient_matrix(nodewise_from_gram(G, grid[k], init=B))
            resid = z - z @ B.T
            scores[k] += float(np.sum(np.mean(resid**2, axis=0)))
    return scores / len(folds)


def cv_lambda(data: DataSet, config: TuningConfig) -> float:
    """Penalty minimizing the pooled cross-validated prediction error."""
    if len(config.lambda_grid) == 1:
        return config.lambda_grid[0]
    scores = lambda_cv_scores(data, config)
    return config.lambda_grid[_argmin_prefer_larger(config.lambda_grid, scores)]


def heldout_score(theta, s_out) -> float:
    """Gaussian negative log-likelihood ``tr(Theta @ S_out) - log|Theta|``."""
    t = core.as_array(theta)
    return float(np.sum(t * core.as_array(s_out))) - core.log_det(t)


def tau_cv_scores(
    data: DataSet, lambda_hat: float, config: TuningConfig, scale: str = CORRELATION, rule: str = "or"
) -> np.ndarray:
    """Mean held-out negative log-likelihood per threshold; ``inf`` where the MLE fails."""
    config.check_sample_size(data.n)
    grid = config.tau_grid
    scores = np.zeros(len(grid))
    folds = _split(data, config.folds, config.seed)
    for fold in folds:
        B = coefficient_matrix(nodewise_from_gram(gram_matrix(fold.train), lambda_hat))
        s_in = refit_input(fold.train, scale)
        z = fold.test
        if scale == COVARIANCE:
            z = z * fold.train.column_scales
        s_out = z.T @ z / z.shape[0]
        cache = {}
        for k, tau in enumerate(grid):
            edges = edges_from_fits(B, tau, rule)
            if edges.edges not in cache:
                try:
                    fit = fit_constrained_mle(s_in, edges)
                    cache[edges.edges] = heldout_score(fit.theta_hat, s_out)
                except NumericFailureError:
                    cache[edges.edges] = math.inf
            scores[k] += cache[edges.edges]
    return scores / len(folds)


def cv_tau(
    data: DataSet, lambda_hat: float, config: TuningConfig, scale: str = CORRELATION, rule: str = "or"
) -> float:
    """Threshold minimizing the cross-validated negative log-likelihood at ``lambda_hat``."""
    if len(config.tau_grid) == 1:
        return config.tau_grid[0]
    scores = tau_cv_scores(data, lambda_hat, config, scale, rule)
    if not np.any(np.isfinite(scores)):
        raise TuningFailureError("the constrained MLE failed for every threshold candidate")
    return config.tau_grid[_argmin_prefer_larger(config.tau_grid, scores)]


@dataclass(frozen=True)
class TuningResult:
    lambda_n: float
    tau: float
    lambda_scores: np.ndarray = field(repr=False, default=None)
    tau_scores: np.ndarray = field(repr=False, default=None)


def tune(data: DataSet, config: TuningConfig, scale: str = CORRELATION, rule: str = "or") -> TuningResult:
    """Sequential CV: penalty first, then threshold at the chosen penalty."""
    lam_scores = lambda_cv_scores(data, config)
    lam = config.lambda_grid[_argmin_prefer_larger(config.lambda_grid, lam_scores)]
    tau_scores = tau_cv_scores(data, lam, config, scale, rule)
    if not np.any(np.isfinite(tau_scores)):
        raise TuningFailureError("the constrained MLE failed for every threshold candidate")
    tau = config.tau_grid[_argmin_prefer_larger(config.tau_grid, tau_scores)]
    return TuningResult(lam, tau, lam_scores, tau_scores)
