"""Matrix and dataset types, sample moments, factorizations and norms.

All matrices are dense ``numpy`` arrays; ``p`` is expected to stay in the
low thousands at most.  The types are immutable: arrays handed to a
constructor are copied and marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Union

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .exceptions import (
    AsymmetricMatrixError,
    DegenerateDataError,
    DimensionError,
    NotPositiveDefiniteError,
    NumericFailureError,
)

COVARIANCE = "covariance"
CORRELATION = "correlation"
PRECISION = "precision"
ROLES = (COVARIANCE, CORRELATION, PRECISION)

ASYMMETRY_TOL = 1e-8
UNIT_DIAGONAL_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric ``p x p`` matrix tagged with its statistical role.

    The constructor symmetrizes ``entries`` via ``(M + M.T) / 2`` and keeps
    the relative asymmetry it removed in ``asymmetry``.  Inputs whose
    relative asymmetry exceeds ``1e-8`` are rejected.
    """

    entries: np.ndarray
    role: str = COVARIANCE
    asymmetry: float = field(default=0.0, compare=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}; expected one of {ROLES}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix has non-finite entries")
        scale = np.max(np.abs(m)) if m.size else 0.0
        asym = np.max(np.abs(m - m.T)) / scale if scale > 0 else 0.0
        if asym > ASYMMETRY_TOL:
            raise AsymmetricMatrixError(
                f"relative asymmetry {asym:.3e} exceeds {ASYMMETRY_TOL:g}"
            )
        sym = (m + m.T) / 2.0
        if self.role == CORRELATION:
            dev = np.max(np.abs(np.diag(sym) - 1.0)) if sym.size else 0.0
            if dev > UNIT_DIAGONAL_TOL:
                raise ValueError(f"correlation matrix diagonal deviates from 1 by {dev:.3e}")
        object.__setattr__(self, "entries", _frozen(sym))
        object.__setattr__(self, "asymmetry", float(asym))

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def with_role(self, role: str) -> "SymMatrix":
        return SymMatrix(self.entries, role)


MatrixLike = Union[SymMatrix, np.ndarray]


def as_array(m) -> np.ndarray:
    """Plain float view of a ``SymMatrix``, ``CholeskyFactor`` or array-like."""
    if isinstance(m, SymMatrix):
        return m.entries
    if isinstance(m, CholeskyFactor):
        return m.reconstruct()
    return np.asarray(m, dtype=float)


def _square(m) -> np.ndarray:
    a = as_array(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def _role_of(m, default=COVARIANCE):
    return m.role if isinstance(m, SymMatrix) else default


@dataclass(frozen=True)
class DataSet:
    """``n x p`` observation matrix plus its standardization record.

    ``column_means`` and ``column_scales`` always refer to the raw data the
    values were derived from: ``raw = values * column_scales + column_means``.
    """

    values: np.ndarray
    standardized: bool = False
    column_means: np.ndarray | None = None
    column_scales: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.values, dtype=float)
        if x.ndim != 2:
            raise DimensionError(f"data must be 2-d (n x p), got shape {x.shape}")
        n, p = x.shape
        if n < 2 or p < 2:
            raise DimensionError(f"need n >= 2 and p >= 2, got n={n}, p={p}")
        if not np.all(np.isfinite(x)):
            raise ValueError("data contains missing or non-finite values")
        means = np.zeros(p) if self.column_means is None else self.column_means
        scales = np.ones(p) if self.column_scales is None else self.column_scales
        means, scales = np.asarray(means, float), np.asarray(scales, float)
        if means.shape != (p,) or scales.shape != (p,):
            raise DimensionError("column_means and column_scales must have length p")
        object.__setattr__(self, "values", _frozen(x))
        object.__setattr__(self, "column_means", _frozen(means))
        object.__setattr__(self, "column_scales", _frozen(scales))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values) -> "DataSet":
        return cls(np.asarray(values, dtype=float))


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to the factored matrix."""

    lower: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", _frozen(self.lower))

    @property
    def p(self) -> int:
        return self.lower.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


@dataclass(frozen=True)
class EdgeSet:
    """Undirected edges over vertices ``0 .. p-1``, stored as ``(i, j)`` with ``i < j``."""

    p: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop ({i}, {i}) is not allowed")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError(f"edge ({i}, {j}) out of range for p={self.p}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_pairs(cls, p, pairs) -> "EdgeSet":
        return cls(p, frozenset(map(tuple, pairs)))

    @classmethod
    def complete(cls, p) -> "EdgeSet":
        return cls(p, frozenset(combinations(range(p), 2)))

    @classmethod
    def empty(cls, p) -> "EdgeSet":
        return cls(p)

    @classmethod
    def from_adjacency(cls, adj) -> "EdgeSet":
        a = np.asarray(adj, dtype=bool)
        a = a | a.T
        i, j = np.nonzero(np.triu(a, k=1))
        return cls(a.shape[0], frozenset(zip(i.tolist(), j.tolist())))

    @classmethod
    def from_support(cls, theta, atol=0.0) -> "EdgeSet":
        """Edges where ``|theta_ij| > atol`` off the diagonal."""
        t = np.asarray(theta, dtype=float)
        return cls.from_adjacency(np.abs(t) > atol)

    def __len__(self):
        return len(self.edges)

    def __contains__(self, pair):
        i, j = pair
        return (min(i, j), max(i, j)) in self.edges

    def __iter__(self):
        return iter(sorted(self.edges))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def neighbors(self, i) -> np.ndarray:
        return np.flatnonzero(self.adjacency()[i])

    def sorted_list(self) -> list:
        return [list(e) for e in sorted(self.edges)]

    def issubset(self, other: "EdgeSet") -> bool:
        return self.edges <= other.edges

    def __and__(self, other):
        return EdgeSet(self.p, self.edges & other.edges)

    def __or__(self, other):
        return EdgeSet(self.p, self.edges | other.edges)

    def __sub__(self, other):
        return EdgeSet(self.p, self.edges - other.edges)


def standardize(data: DataSet) -> DataSet:
    """Center every column and scale it to unit standard deviation (divisor n).

    Raises
    ------
    DegenerateDataError
        If a column has zero empirical variance; ``err.column`` holds its index.
    """
    x = data.values
    means = x.mean(axis=0)
    centered = x - means
    scales = np.sqrt(np.mean(centered**2, axis=0))
    for j, s in enumerate(scales):
        # relative test so that columns of identical large values are caught
        if not s > 1e-13 * max(1.0, abs(means[j])):
            raise DegenerateDataError(f"column {j} has zero variance", column=j)
    z = centered / scales
    return DataSet(
        z,
        standardized=True,
        column_means=data.column_means + data.column_scales * means,
        column_scales=data.column_scales * scales,
    )


def sample_covariance(data) -> SymMatrix:
    """``X.T @ X / n`` with the mean taken to be zero.

    Accepts a ``DataSet`` or a raw ``n x p`` array (for which the caller
    asserts the columns are centered).
    """
    x = data.values if isinstance(data, DataSet) else np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"data must be 2-d, got shape {x.shape}")
    n = x.shape[0]
    return SymMatrix(x.T @ x / n, COVARIANCE)


def sample_correlation(s) -> SymMatrix:
    """Rescale a covariance matrix to unit diagonal."""
    a = _square(s)
    d = np.diag(a)
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise DegenerateDataError(
            f"variance at index {bad[0]} is not strictly positive", column=int(bad[0])
        )
    w = 1.0 / np.sqrt(d)
    g = a * np.outer(w, w)
    g = (g + g.T) / 2.0
    np.fill_diagonal(g, 1.0)
    return SymMatrix(g, CORRELATION)


def operator_norm(m, max_iter: int = 10_000, rtol: float = 1e-10, block: int = 4) -> float:
    """Largest absolute eigenvalue of a symmetric matrix by block power iteration.

    The iteration runs on ``m @ m`` so that eigenvalues of opposite sign and
    equal magnitude cannot stall it.  A small block of vectors (the first is
    all-ones, the rest fixed pseudo-random) is iterated with re-orthogonalization
    and a Rayleigh-Ritz step, so clusters of nearly equal top eigenvalues
    converge at the rate of the first eigenvalue outside the block.  Stops
    when the top Ritz value changes by less than ``rtol`` relative.
    """
    a = _square(m)
    p = a.shape[0]
    if p == 0:
        return 0.0
    a2 = a @ a
    k = min(p, block)
    x = np.empty((p, k))
    x[:, 0] = 1.0
    if k > 1:
        x[:, 1:] = np.random.default_rng(20_100_531).standard_normal((p, k - 1))
    q, _ = np.linalg.qr(x)
    prev = None
    for _ in range(max_iter):
        q, _ = np.linalg.qr(a2 @ q)
        top = float(np.linalg.eigvalsh(q.T @ a2 @ q)[-1])
        if top <= 0.0:
            return 0.0
        if prev is not None and abs(top - prev) <= rtol * top:
            return float(np.sqrt(top))
        prev = top
    raise NumericFailureError(f"power iteration did not converge in {max_iter} iterations")


def frobenius_diff(a, b) -> float:
    x, y = as_array(a), as_array(b)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.sum((x - y) ** 2)))


def cholesky(m) -> CholeskyFactor:
    """Lower Cholesky factor.

    Raises ``NotPositiveDefiniteError`` carrying the zero-based index of the
    first nonpositive pivot.
    """
    a = _square(m)
    if a.shape[0] == 0:
        return CholeskyFactor(np.zeros((0, 0)))
    c, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (pivot {info - 1})", pivot=info - 1
        )
    if info < 0:
        raise ValueError(f"dpotrf rejected argument {-info}")
    return CholeskyFactor(c)


def _factor(m) -> CholeskyFactor:
    return m if isinstance(m, CholeskyFactor) else cholesky(m)


def log_det(m) -> float:
    L = _factor(m).lower
    return float(2.0 * np.sum(np.log(np.diag(L))))


_INVERSE_ROLE = {COVARIANCE: PRECISION, CORRELATION: PRECISION, PRECISION: COVARIANCE}


def inverse(m) -> SymMatrix:
    """Inverse of a positive definite matrix via two triangular solves."""
    L = _factor(m).lower
    p = L.shape[0]
    linv = solve_triangular(L, np.eye(p), lower=True)
    inv = linv.T @ linv
    return SymMatrix(inv, _INVERSE_ROLE[_role_of(m)])
