"""Gaussian graphical model estimation by thresholded nodewise lasso and constrained MLE refitting."""

from .core import DataSet, EdgeSet, SymMatrix, sample_correlation, sample_covariance, standardize
from .diagnostics import bias_norm, essential_sparsity, precision_to_regression, sparse_eigenvalues
from .exceptions import (
    ConfigError,
    ConvergenceError,
    GelatoError,
    MleNonexistenceError,
    NumericFailureError,
)
from .graph import edges_from_fits, select_graph
from .lasso import fit_lasso, nodewise_regressions
from .metrics import error_report, kl_divergence, risk
from .mle import MleResult, fit_constrained_mle, gelato_estimate, to_data_scale
from .simulate import ModelSpec, gen_ar1_block, gen_exp_decay, gen_random_precision, sample_gaussian
from .tuning import TuningConfig, make_grids, tune

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "DataSet", "EdgeSet", "GelatoError",
    "MleNonexistenceError", "MleResult", "ModelSpec", "NumericFailureError",
    "SymMatrix", "TuningConfig", "bias_norm", "edges_from_fits", "error_report",
    "essential_sparsity", "fit_constrained_mle", "fit_lasso", "gelato_estimate",
    "gen_ar1_block", "gen_exp_decay", "gen_random_precision", "kl_divergence",
    "make_grids", "nodewise_regressions", "precision_to_regression", "risk",
    "sample_correlation", "sample_covariance", "sample_gaussian", "select_graph",
    "sparse_eigenvalues", "standardize", "to_data_scale", "tune",
]
