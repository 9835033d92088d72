"""Computable sparsity and conditioning quantities of a true precision matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import core
from .core import EdgeSet
from .tuning import rate

MAX_SPARSE_M = 12
MAX_SUBSETS = 5_000_000
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SparsityReport:
    per_node: tuple
    total: int
    lambda_used: float
    node_degrees: tuple
    max_degree: int

    def to_dict(self) -> dict:
        return {
            "per_node": list(self.per_node),
            "total": self.total,
            "lambda_used": self.lambda_used,
            "node_degrees": list(self.node_degrees),
            "max_degree": self.max_degree,
        }


def _essential_row(row, diag, lam2):
    """Smallest integer s with ``sum_j min(theta_ij^2, lam2*theta_ii) <= s*lam2*theta_ii``."""
    cap = lam2 * diag
    sq = row**2
    # capped terms are counted, not summed, so k*cap is exact
    k = int(np.count_nonzero(sq >= cap))
    small = float(np.sum(sq[sq < cap]))
    s = 0
    while (k - s) * cap + small > 0:
        s += 1
    return s


def essential_sparsity(theta0, n: int, zero_tol: float = ZERO_TOL) -> SparsityReport:
    """Per-row essential sparsity at ``lambda = sqrt(2 log p / n)``.

    Node degrees count off-diagonal entries with ``|theta_ij| > zero_tol`` so
    that rounding noise from a numerical inverse is not counted as an edge.
    """
    t = core.as_array(theta0)
    p = t.shape[0]
    diag = np.diag(t)
    if not np.all(diag > 0):
        raise ValueError("theta0 must have a positive diagonal")
    lam = rate(p, n)
    per_node, degrees = [], []
    for i in range(p):
        row = np.delete(t[i], i)
        per_node.append(_essential_row(row, diag[i], lam * lam))
        degrees.append(int(np.count_nonzero(np.abs(row) > zero_tol)))
    return SparsityReport(
        per_node=tuple(per_node),
        total=int(sum(per_node)),
        lambda_used=lam,
        node_degrees=tuple(degrees),
        max_degree=max(degrees),
    )


def precision_to_regression(theta0):
    """Nodewise regression coefficients and residual variances implied by ``theta0``.

    Returns ``(B, v)`` with ``B[i, j] = -theta_ij / theta_ii`` (the coefficient
    of ``X_j`` when regressing ``X_i`` on the rest; zero diagonal) and
    ``v[i] = 1 / theta_ii``.
    """
    t = core.as_array(theta0)
    d = np.diag(t)
    if not np.all(d > 0):
        raise ValueError("theta0 must have a positive diagonal")
    B = -t / d[:, None]
    np.fill_diagonal(B, 0.0)
    return B, 1.0 / d


def sparse_eigenvalues(sigma0, m: int, max_subsets: int = MAX_SUBSETS):
    """``(rho_min(m), rho_max(m))`` by enumerating all size-``m`` principal submatrices.

    Supports smaller than ``m`` need not be visited: by eigenvalue interlacing
    their extremes are dominated by those of any size-``m`` superset.
    """
    s = core.as_array(sigma0)
    p = s.shape[0]
    if m < 1:
        raise ValueError("m must be at least 1")
    if m > MAX_SPARSE_M:
        raise ValueError(
            f"m={m} exceeds the enumeration cap of {MAX_SPARSE_M}; "
            "sparse eigenvalues are computed by brute force over supports"
        )
    m = min(m, p)
    count = math.comb(p, m)
    if count > max_subsets:
        raise ValueError(
            f"C({p}, {m}) = {count} supports exceeds the limit of {max_subsets}"
        )
    lo, hi = np.inf, -np.inf
    batch = []
    for support in combinations(range(p), m):
        batch.append(support)
        if len(batch) == 4096:
            lo, hi = _batch_extremes(s, batch, lo, hi)
            batch = []
    if batch:
        lo, hi = _batch_extremes(s, batch, lo, hi)
    return float(lo), float(hi)


def _batch_extremes(s, supports, lo, hi):
    idx = np.asarray(supports)
    subs = s[idx[:, :, None], idx[:, None, :]]
    eig = np.linalg.eigvalsh(subs)
    return min(lo, eig[:, 0].min()), max(hi, eig[:, -1].max())


def bias_norm(theta0, e_hat: EdgeSet, true_edges: EdgeSet) -> float:
    """Frobenius distance between ``theta0`` and its restriction to the diagonal plus ``e_hat & true_edges``."""
    t = core.as_array(theta0)
    keep = (e_hat & true_edges).adjacency() | np.eye(t.shape[0], dtype=bool)
    return float(np.sqrt(np.sum(t[~keep] ** 2)))
