"""Thresholding of nodewise lasso coefficients and edge-set assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataSet, EdgeSet
from .lasso import RegressionFit, coefficient_matrix, nodewise_regressions


@dataclass(frozen=True)
class ThresholdedFits:
    """Thresholded coefficient matrix ``B`` (row ``i`` = regression of ``X_i``).

    ``kept[i]`` and ``dropped[i]`` partition the predictors of node ``i``.
    """

    coefficients: np.ndarray
    tau: float

    @property
    def p(self) -> int:
        return self.coefficients.shape[0]

    @property
    def kept(self) -> list:
        return [frozenset(np.flatnonzero(row).tolist()) for row in self.coefficients]

    @property
    def dropped(self) -> list:
        p = self.p
        return [
            frozenset(set(range(p)) - {i} - k) for i, k in enumerate(self.kept)
        ]


def threshold_coefficients(fit, tau: float) -> np.ndarray:
    """Zero every coefficient with ``|b| <= tau``; survivors keep their value."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    b = np.asarray(fit.coefficients if isinstance(fit, RegressionFit) else fit, dtype=float)
    return np.where(np.abs(b) > tau, b, 0.0)


def threshold_fits(fits, tau: float) -> ThresholdedFits:
    """Threshold a list of ``RegressionFit`` or a ``p x p`` coefficient matrix."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    B = np.asarray(fits, dtype=float) if isinstance(fits, np.ndarray) else coefficient_matrix(fits)
    B = np.where(np.abs(B) > tau, B, 0.0)
    np.fill_diagonal(B, 0.0)
    return ThresholdedFits(B, float(tau))


def or_rule_edges(thresholded: ThresholdedFits) -> EdgeSet:
    nz = thresholded.coefficients != 0
    return EdgeSet.from_adjacency(nz | nz.T)


def and_rule_edges(thresholded: ThresholdedFits) -> EdgeSet:
    nz = thresholded.coefficients != 0
    return EdgeSet.from_adjacency(nz & nz.T)


_RULES = {"or": or_rule_edges, "and": and_rule_edges}


def edges_from_fits(fits, tau, rule="or") -> EdgeSet:
    try:
        combine = _RULES[rule]
    except KeyError:
        raise ValueError(f"unknown rule {rule!r}; expected 'or' or 'and'") from None
    return combine(threshold_fits(fits, tau))


def select_graph(data: DataSet, lambda_n: float, tau: float, rule: str = "or") -> EdgeSet:
    """Nodewise lasso at ``lambda_n``, threshold at ``tau``, combine by ``rule``."""
    return edges_from_fits(nodewise_regressions(data, lambda_n), tau, rule)
