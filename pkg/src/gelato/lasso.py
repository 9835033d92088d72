"""Lasso by cyclic coordinate descent, and the p nodewise regressions.

The objective is ``(1/(2n)) ||y - X b||^2 + lambda_n ||b||_1``.  The solver
works on covariance (Gram) form, ``G = X.T X / n`` and ``c = X.T y / n``, so
the nodewise driver can share one ``p x p`` Gram matrix across all ``p``
regressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .core import DataSet
from .exceptions import DimensionError, SolverFailureError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class RegressionFit:
    """Result of one lasso regression.

    ``coefficients`` has length ``p - 1`` and is ordered by the predictor
    indices ``j != node`` in increasing order (see :meth:`full`).
    """

    node: int
    coefficients: np.ndarray
    lambda_n: float
    iterations: int
    objective: float
    kkt_violation: float = 0.0
    objective_history: tuple = field(default=(), repr=False, compare=False)

    def full(self, p: int) -> np.ndarray:
        """Length-``p`` vector with a zero at the response index."""
        out = np.zeros(p)
        out[np.arange(p) != self.node] = self.coefficients
        return out


@numba.njit(cache=True, nogil=True)
def _soft(z, lam):
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


@numba.njit(cache=True, nogil=True)
def _objective(yy, c, g, beta, lam):
    # with g = c - G beta:  beta' G beta = beta' (c - g)
    s = 0.0
    l1 = 0.0
    for j in range(beta.shape[0]):
        s += (c[j] + g[j]) * beta[j]
        l1 += abs(beta[j])
    return 0.5 * (yy - s) + lam * l1


@numba.njit(cache=True, nogil=True)
def _sweep(G, g, beta, lam, active_only):
    q = beta.shape[0]
    max_change = 0.0
    for j in range(q):
        if active_only and beta[j] == 0.0:
            continue
        gjj = G[j, j]
        if gjj <= 0.0:
            continue
        old = beta[j]
        new = _soft(g[j] + gjj * old, lam) / gjj
        delta = new - old
        if delta != 0.0:
            beta[j] = new
            for k in range(q):
                g[k] -= G[k, j] * delta
            if abs(delta) > max_change:
                max_change = abs(delta)
    return max_change


@numba.njit(cache=True, nogil=True)
def _cd_gram(G, c, yy, lam, beta, tol, max_sweeps, history):
    """Coordinate descent from ``beta`` (modified in place).

    Alternates a full sweep with an inner loop over the active set until the
    active set converges; stops once a full sweep moves no coordinate by more
    than ``tol``.  Returns ``(sweeps, converged, n_recorded)``.
    """
    q = beta.shape[0]
    g = c.copy()
    for j in range(q):
        if beta[j] != 0.0:
            for k in range(q):
                g[k] -= G[k, j] * beta[j]
    sweeps = 0
    n_rec = 0
    if history.shape[0] > 0:
        history[0] = _objective(yy, c, g, beta, lam)
        n_rec = 1
    while sweeps < max_sweeps:
        change = _sweep(G, g, beta, lam, False)
        sweeps += 1
        if n_rec < history.shape[0]:
            history[n_rec] = _objective(yy, c, g, beta, lam)
            n_rec += 1
        if change < tol:
            return sweeps, True, n_rec
        while sweeps < max_sweeps:
            change = _sweep(G, g, beta, lam, True)
            sweeps += 1
            if n_rec < history.shape[0]:
                history[n_rec] = _objective(yy, c, g, beta, lam)
                n_rec += 1
            if change < tol:
                break
    return sweeps, False, n_rec


def kkt_violation(G, c, beta, lambda_n) -> float:
    """Largest violation of the lasso subgradient conditions."""
    grad = c - G @ beta
    active = beta != 0
    viol = np.zeros_like(beta)
    viol[active] = np.abs(grad[active] - lambda_n * np.sign(beta[active]))
    viol[~active] = np.maximum(np.abs(grad[~active]) - lambda_n, 0.0)
    return float(viol.max()) if viol.size else 0.0


def fit_lasso_gram(
    gram,
    xty,
    yty,
    lambda_n,
    *,
    init=None,
    node=-1,
    tol=DEFAULT_TOL,
    max_sweeps=DEFAULT_MAX_SWEEPS,
    record_history=False,
) -> RegressionFit:
    """Lasso in covariance form: ``gram = X'X/n``, ``xty = X'y/n``, ``yty = y'y/n``."""
    if lambda_n < 0:
        raise ValueError("lambda_n must be nonnegative")
    G = np.ascontiguousarray(gram, dtype=float)
    c = np.ascontiguousarray(xty, dtype=float)
    q = c.shape[0]
    if G.shape != (q, q):
        raise DimensionError(f"gram shape {G.shape} does not match {q} predictors")
    beta = np.zeros(q) if init is None else np.array(init, dtype=float)
    history = np.empty(min(max_sweeps, 100_000) + 1 if record_history else 0)
    sweeps, converged, n_rec = _cd_gram(
        G, c, float(yty), float(lambda_n), beta, float(tol), int(max_sweeps), history
    )
    viol = kkt_violation(G, c, beta, lambda_n)
    if not converged:
        raise SolverFailureError(
            f"lasso did not converge in {max_sweeps} sweeps (KKT violation {viol:.3e})",
            kkt_violation=viol,
            node=node,
        )
    g = c - G @ beta
    obj = 0.5 * (float(yty) - float((c + g) @ beta)) + lambda_n * float(np.abs(beta).sum())
    return RegressionFit(
        node=node,
        coefficients=beta,
        lambda_n=float(lambda_n),
        iterations=int(sweeps),
        objective=obj,
        kkt_violation=viol,
        objective_history=tuple(history[:n_rec]),
    )


def fit_lasso(design, response, lambda_n, **kwargs) -> RegressionFit:
    """Solve ``min (1/(2n)) ||y - X b||^2 + lambda_n ||b||_1`` without intercept.

    Parameters
    ----------
    design : array, shape (n, q)
    response : array, shape (n,)
    lambda_n : float
        Penalty level, ``>= 0``.
    **kwargs
        Passed to :func:`fit_lasso_gram` (``init``, ``tol``, ``max_sweeps``,
        ``record_history``, ``node``).

    Raises
    ------
    SolverFailureError
        When the sweep cap is reached; carries the last KKT violation.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DimensionError(f"design {X.shape} and response {y.shape} disagree")
    n = X.shape[0]
    return fit_lasso_gram(X.T @ X / n, X.T @ y / n, y @ y / n, lambda_n, **kwargs)


def gram_matrix(data) -> np.ndarray:
    x = data.values if isinstance(data, DataSet) else np.asarray(data, dtype=float)
    return x.T @ x / x.shape[0]


def nodewise_from_gram(gram, lambda_n, *, init=None, **kwargs) -> list[RegressionFit]:
    """All ``p`` regressions from a shared Gram matrix.

    ``init`` may be a ``p x p`` matrix whose row ``i`` (off the diagonal)
    warm-starts regression ``i``.
    """
    G = np.asarray(gram, dtype=float)
    p = G.shape[0]
    fits = []
    for i in range(p):
        others = np.arange(p) != i
        start = None if init is None else np.asarray(init)[i, others]
        try:
            fit = fit_lasso_gram(
                G[np.ix_(others, others)], G[others, i], G[i, i], lambda_n,
                init=start, node=i, **kwargs,
            )
        except SolverFailureError as err:
            raise SolverFailureError(
                f"node {i}: {err}", kkt_violation=err.kkt_violation, node=i
            ) from err
        fits.append(fit)
    return fits


def nodewise_regressions(data: DataSet, lambda_n: float, **kwargs) -> list[RegressionFit]:
    """Regress every column on all the others with the shared penalty ``lambda_n``."""
    return nodewise_from_gram(gram_matrix(data), lambda_n, **kwargs)


def coefficient_matrix(fits) -> np.ndarray:
    """Stack fits into ``B`` with ``B[i, j]`` the coefficient of ``X_j`` in regression ``i``."""
    p = len(fits)
    B = np.zeros((p, p))
    for fit in fits:
        B[fit.node] = fit.full(p)
    return B
