"""Risk, Kullback-Leibler divergence and norm errors of precision estimates."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import core
from .exceptions import NotPositiveDefiniteError

MIN_EIGENVALUE = 1e-10


def _checked_pd(m, name):
    a = core.as_array(m)
    lo = np.linalg.eigvalsh(a)[0]
    if not lo >= MIN_EIGENVALUE:
        raise NotPositiveDefiniteError(
            f"{name} is not (numerically) positive definite: min eigenvalue {lo:.3e}"
        )
    return a


def risk(theta, sigma0) -> float:
    """Population risk ``tr(Theta @ Sigma0) - log|Theta|``."""
    t = _checked_pd(theta, "theta")
    s = core.as_array(sigma0)
    return float(np.sum(t * s)) - core.log_det(t)


def kl_divergence(sigma0, sigma_hat) -> float:
    """``KL(N(0, sigma0) || N(0, sigma_hat))``.

    Computed as ``(tr(Sigma_hat^-1 Sigma0) - log|Sigma_hat^-1 Sigma0| - p) / 2``.
    """
    s0 = _checked_pd(sigma0, "sigma0")
    sh = _checked_pd(sigma_hat, "sigma_hat")
    theta_hat = core.inverse(sh).entries
    p = s0.shape[0]
    tr = float(np.sum(theta_hat * s0))
    logdet_ratio = core.log_det(s0) - core.log_det(sh)
    return 0.5 * (tr - logdet_ratio - p)


@dataclass(frozen=True)
class ErrorReport:
    frob_theta: float
    frob_sigma: float
    op_theta: float
    op_sigma: float
    kl: float
    risk_gap: float

    def to_dict(self) -> dict:
        return asdict(self)


def error_report(theta_hat, sigma_hat, theta0, sigma0) -> ErrorReport:
    """Frobenius/operator errors, KL divergence and risk gap ``R(Theta_hat) - R(Theta0)``."""
    return ErrorReport(
        frob_theta=core.frobenius_diff(theta_hat, theta0),
        frob_sigma=core.frobenius_diff(sigma_hat, sigma0),
        op_theta=_op_error(theta_hat, theta0),
        op_sigma=_op_error(sigma_hat, sigma0),
        kl=kl_divergence(sigma0, sigma_hat),
        risk_gap=risk(theta_hat, sigma0) - risk(theta0, sigma0),
    )


def _op_error(a, b):
    d = core.as_array(a) - core.as_array(b)
    return core.operator_norm((d + d.T) / 2.0)
