"""Gaussian maximum likelihood for a precision matrix with a fixed zero pattern.

Minimizes ``tr(Theta @ S) - log|Theta|`` over positive definite ``Theta``
with ``Theta[i, j] = 0`` for every off-diagonal pair outside the edge set.
Both solvers cycle over nodes and, for node ``j``, regress ``j`` on its
graph neighbours.  At convergence ``inv(Theta)`` agrees with ``S`` on the
diagonal and on every edge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import core
from .core import (
    CORRELATION,
    COVARIANCE,
    PRECISION,
    DataSet,
    EdgeSet,
    SymMatrix,
    sample_correlation,
    sample_covariance,
    standardize,
)
from .exceptions import ConvergenceError, MleNonexistenceError, NotPositiveDefiniteError
from .graph import select_graph

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_CYCLES = 10_000
DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True)
class MleResult:
    theta_hat: SymMatrix
    sigma_hat: SymMatrix
    edge_set: EdgeSet
    scale: str
    iterations: int
    max_kkt_violation: float


def _objective(theta, s):
    return float(np.sum(theta * s)) - core.log_det(theta)


def _node_update(W, S, j, rest, nb_loc):
    """Exact minimization over column ``j`` of Theta with the rest held fixed.

    ``A = inv(Theta[rest, rest])`` comes from the current ``W = inv(Theta)``
    by a Schur complement.  Returns the new off-diagonal column (on ``rest``),
    the new diagonal entry and the updated ``W``.
    """
    s22 = S[j, j]
    w12 = W[rest, j]
    A = W[np.ix_(rest, rest)] - np.outer(w12, w12) / W[j, j]
    theta12 = np.zeros(rest.size)
    W_new = np.empty_like(W)
    if nb_loc.size:
        s12 = S[rest[nb_loc], j]
        try:
            fac = cho_factor(A[np.ix_(nb_loc, nb_loc)], lower=True, check_finite=False)
        except LinAlgError:
            raise MleNonexistenceError(
                f"conditional covariance lost positive definiteness at node {j}"
            ) from None
        x = cho_solve(fac, s12, check_finite=False)
        theta12[nb_loc] = -x / s22
        theta22 = (1.0 + x @ s12 / s22) / s22
        col = A[:, nb_loc] @ x
        W_new[np.ix_(rest, rest)] = A + np.outer(col, col) / s22
    else:
        theta22 = 1.0 / s22
        col = np.zeros(rest.size)
        W_new[np.ix_(rest, rest)] = A
    W_new[rest, j] = col
    W_new[j, rest] = col
    W_new[j, j] = s22
    return theta12, theta22, W_new


def _regression_cycles(S, rests, nb_locs, tol, max_cycles):
    """Covariance-selection regression algorithm on ``W``, started at ``W = S``.

    Needs a positive definite ``S``: the start is then feasible and every
    column update keeps ``W`` positive definite.
    """
    p = S.shape[0]
    W = S.copy()
    for cycle in range(1, max_cycles + 1):
        change = 0.0
        for j in range(p):
            rest, loc = rests[j], nb_locs[j]
            if loc.size:
                nb = rest[loc]
                beta = _solve_pd(W[np.ix_(nb, nb)], S[nb, j], j)
                w12 = W[np.ix_(rest, nb)] @ beta
            else:
                w12 = np.zeros(rest.size)
            change = max(change, float(np.max(np.abs(W[rest, j] - w12))))
            W[rest, j] = w12
            W[j, rest] = w12
        if change < 0.1 * tol:
            return _precision_from(W, S, rests, nb_locs), cycle
    return _precision_from(W, S, rests, nb_locs), None


def _solve_pd(a, b, j):
    try:
        return cho_solve(cho_factor(a, lower=True, check_finite=False), b, check_finite=False)
    except LinAlgError:
        raise MleNonexistenceError(
            f"neighbour covariance of node {j} is not positive definite"
        ) from None


def _precision_from(W, S, rests, nb_locs):
    p = S.shape[0]
    theta = np.zeros((p, p))
    for j in range(p):
        rest, loc = rests[j], nb_locs[j]
        nb = rest[loc]
        beta = _solve_pd(W[np.ix_(nb, nb)], S[nb, j], j) if nb.size else np.zeros(0)
        schur = S[j, j] - S[nb, j] @ beta
        if not schur > 1e-12 * S[j, j]:
            raise MleNonexistenceError(f"conditional variance of node {j} collapsed to {schur:.3e}")
        theta[j, j] = 1.0 / schur
        theta[nb, j] = -beta / schur
    return (theta + theta.T) / 2.0


def _descent_cycles(S, rests, nb_locs, tol, max_cycles):
    """Node-wise exact minimization over Theta, started at ``diag(S)^-1``.

    Works for singular ``S`` as well; divergence of the iterates signals an
    unbounded likelihood.
    """
    p = S.shape[0]
    theta = np.diag(1.0 / np.diag(S))
    W = np.diag(np.diag(S))
    blowup = DIVERGENCE_FACTOR * float(np.max(1.0 / np.diag(S)))
    for cycle in range(1, max_cycles + 1):
        change = 0.0
        for j in range(p):
            rest = rests[j]
            theta12, theta22, W_new = _node_update(W, S, j, rest, nb_locs[j])
            change = max(change, float(np.max(np.abs(W_new - W))))
            W = W_new
            theta[rest, j] = theta12
            theta[j, rest] = theta12
            theta[j, j] = theta22
        if not (np.all(np.isfinite(theta)) and np.max(np.abs(theta)) < blowup):
            raise MleNonexistenceError(
                "precision iterates diverge; the constrained MLE does not exist "
                "for this input and edge set"
            )
        if change < 0.1 * tol:
            return theta, cycle
    return theta, None


def _is_pd(S):
    try:
        cho_factor(S, lower=True, check_finite=False)
    except LinAlgError:
        return False
    return True


def fit_constrained_mle(
    input, edges: EdgeSet, tol: float = DEFAULT_TOL, max_cycles: int = DEFAULT_MAX_CYCLES
) -> MleResult:
    """Constrained MLE of the precision matrix given ``input`` (S or Gamma).

    A positive definite input is solved by the covariance-selection
    regression algorithm on ``W = Sigma_hat`` started at ``W = S``: node
    ``j`` is regressed on its graph neighbours under ``W`` and the free
    entries of column ``j`` are filled in from the fit.  A singular input
    (``n <= p``) uses block coordinate descent on ``Theta`` started at
    ``diag(S)^-1``, which stays positive definite without a feasible
    covariance to start from.  Both stop once no entry of ``W`` moves by
    more than ``0.1 * tol`` in a cycle.

    Parameters
    ----------
    input : SymMatrix or array
        Sample covariance or correlation matrix; its role decides the
        reported ``scale``.
    edges : EdgeSet
        Allowed off-diagonal nonzeros.
    tol : float
        Bound on the reported KKT violation (moment mismatch on edges and
        the diagonal).

    Raises
    ------
    MleNonexistenceError
        If the iterates diverge or lose positive definiteness, which is how
        an unbounded likelihood shows up.
    ConvergenceError
        If ``max_cycles`` cycles do not reach ``tol``.
    """
    S = core.as_array(input).copy()
    p = S.shape[0]
    if edges.p != p:
        raise ValueError(f"edge set has p={edges.p}, input has p={p}")
    if not np.all(np.diag(S) > 0):
        raise ValueError("input must have a strictly positive diagonal")
    scale = CORRELATION if getattr(input, "role", None) == CORRELATION else COVARIANCE

    adj = edges.adjacency()
    rests = [np.delete(np.arange(p), j) for j in range(p)]
    nb_locs = [np.flatnonzero(adj[j, rests[j]]) for j in range(p)]
    solver = _regression_cycles if _is_pd(S) else _descent_cycles
    theta, cycles = solver(S, rests, nb_locs, tol, max_cycles)
    try:
        sigma = core.inverse(theta).entries
    except NotPositiveDefiniteError:
        raise MleNonexistenceError("precision estimate is not positive definite") from None
    kkt = _kkt(theta, sigma, S, adj)
    if cycles is None or kkt > tol:
        raise ConvergenceError(
            f"constrained MLE stopped after {cycles or max_cycles} cycles with KKT gap {kkt:.3e}",
            kkt_gap=kkt,
        )
    return MleResult(
        theta_hat=SymMatrix(theta, PRECISION),
        sigma_hat=SymMatrix(sigma, COVARIANCE),
        edge_set=edges,
        scale=scale,
        iterations=cycles,
        max_kkt_violation=kkt,
    )


def _kkt(theta, sigma, s, adj):
    free = adj | np.eye(adj.shape[0], dtype=bool)
    off = ~free
    moment = np.max(np.abs(sigma - s)[free]) if free.any() else 0.0
    zeros = np.max(np.abs(theta[off])) if off.any() else 0.0
    return float(max(moment, zeros))


def verify_kkt(result: MleResult, input) -> float:
    """Largest stationarity violation of ``result`` for ``input``.

    Covers ``|Sigma_hat - input|`` on the edges and the diagonal, and
    ``|Theta_hat|`` on the non-edges.
    """
    return _kkt(
        core.as_array(result.theta_hat),
        core.as_array(result.sigma_hat),
        core.as_array(input),
        result.edge_set.adjacency(),
    )


def mle_objective(theta, input) -> float:
    """``tr(Theta @ input) - log|Theta|``."""
    return _objective(core.as_array(theta), core.as_array(input))


def chordal_clique_bound(edges: EdgeSet) -> int:
    """Largest clique of a greedy (minimum-degree) chordal cover of the graph.

    This upper-bounds the maximal clique size of a minimal chordal cover;
    the MLE is guaranteed to exist when the sample size is at least that
    size.
    """
    adj = {i: set(edges.neighbors(i).tolist()) for i in range(edges.p)}
    best = 1 if edges.p else 0
    remaining = set(adj)
    while remaining:
        v = min(remaining, key=lambda u: (len(adj[u]), u))
        nb = adj[v]
        best = max(best, len(nb) + 1)
        for a in nb:
            adj[a] |= nb - {a}
            adj[a].discard(v)
        remaining.discard(v)
        del adj[v]
    return best


def rescale(result: MleResult, scales) -> tuple[np.ndarray, np.ndarray]:
    """Map a correlation-scale fit back to a covariance scale.

    With ``W = diag(scales)``: ``Theta = W^-1 Omega W^-1`` and
    ``Sigma = W Psi W``.
    """
    w = np.asarray(scales, dtype=float)
    theta = core.as_array(result.theta_hat) / np.outer(w, w)
    sigma = core.as_array(result.sigma_hat) * np.outer(w, w)
    return theta, sigma


def to_data_scale(result: MleResult, data: DataSet) -> tuple[np.ndarray, np.ndarray]:
    """``(Theta_hat, Sigma_hat)`` on the scale of the raw data behind ``data``."""
    if result.scale == CORRELATION:
        return rescale(result, data.column_scales)
    return core.as_array(result.theta_hat), core.as_array(result.sigma_hat)


def refit_input(data: DataSet, scale: str = CORRELATION) -> SymMatrix:
    """Matrix the refit is based on: sample correlation, or the raw-scale covariance."""
    if not data.standardized:
        data = standardize(data)
    gamma = sample_correlation(sample_covariance(data))
    if scale == CORRELATION:
        return gamma
    if scale == COVARIANCE:
        w = data.column_scales
        return SymMatrix(gamma.entries * np.outer(w, w), COVARIANCE)
    raise ValueError(f"unknown scale {scale!r}")


def gelato_estimate(
    data: DataSet,
    lambda_n: float,
    tau: float,
    scale: str = CORRELATION,
    rule: str = "or",
    tol: float = DEFAULT_TOL,
    edges: EdgeSet | None = None,
) -> MleResult:
    """Select the graph by thresholded nodewise lasso, then refit by constrained MLE.

    ``scale="correlation"`` fits on the sample correlation matrix (the
    estimate then lives on the standardized scale; see :func:`to_data_scale`),
    ``scale="covariance"`` fits on the sample covariance of the raw data.
    A precomputed ``edges`` skips the selection step.
    """
    if not data.standardized:
        data = standardize(data)
    if edges is None:
        edges = select_graph(data, lambda_n, tau, rule=rule)
    bound = chordal_clique_bound(edges)
    if bound > data.n:
        logger.warning(
            "greedy chordal cover has a clique of size %d > n=%d; the MLE may not exist",
            bound, data.n,
        )
    return fit_constrained_mle(refit_input(data, scale), edges, tol=tol)
