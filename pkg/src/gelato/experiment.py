"""Monte Carlo experiments: sample from a model, estimate, score, summarize."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import CORRELATION, COVARIANCE, EdgeSet
from .diagnostics import ZERO_TOL, essential_sparsity
from .exceptions import ConfigError, GelatoError
from .metrics import error_report
from .mle import gelato_estimate, to_data_scale
from .simulate import ModelSpec, replicate_seed, sample_gaussian
from .tuning import cv_lambda, cv_tau, make_grids, rate

SCALES = {"corr": CORRELATION, "correlation": CORRELATION, "cov": COVARIANCE, "covariance": COVARIANCE}

CSV_FIELDS = (
    "seed", "n", "replicate", "family", "lambda", "tau",
    "frob_theta", "frob_sigma", "kl", "n_edges", "n_false_edges", "error",
)
SUMMARY_METRICS = ("frob_theta", "frob_sigma", "kl", "n_edges", "n_false_edges")


@dataclass(frozen=True)
class ParamSpec:
    """How to obtain a tuning value: a fixed ``value``, ``"cv"``, or ``"rate"`` with a multiplier."""

    kind: str
    value: float | None = None

    @classmethod
    def parse(cls, text) -> "ParamSpec":
        if isinstance(text, ParamSpec):
            return text
        if isinstance(text, (int, float)):
            return cls("value", float(text))
        s = str(text).strip().lower()
        if s == "cv":
            return cls("cv")
        if s.startswith("rate"):
            _, _, mult = s.partition(":")
            try:
                return cls("rate", float(mult) if mult else None)
            except ValueError:
                raise ConfigError(f"bad rate multiplier in {text!r}") from None
        try:
            v = float(s)
        except ValueError:
            raise ConfigError(f"expected a number, 'cv' or 'rate:<mult>', got {text!r}") from None
        if not v >= 0:
            raise ConfigError(f"tuning value must be nonnegative, got {text!r}")
        return cls("value", v)

    def __str__(self):
        if self.kind == "cv":
            return "cv"
        if self.kind == "rate":
            return "rate" if self.value is None else f"rate:{self.value:g}"
        return repr(self.value)


DEFAULT_D0 = 2.0
DEFAULT_D4 = 1.0


def resolve_tuning(data, lam: ParamSpec, tau: ParamSpec, folds=10, seed=0, scale=CORRELATION, rule="or"):
    """Concrete ``(lambda_n, tau)`` for a standardized data set.

    ``rate:<d0>`` gives ``lambda_n = d0 sqrt(2 log p / n)``.  ``rate:<D4>`` for
    the threshold gives ``tau = D4 * lambda_n``, which equals ``D4 d0 sqrt(2 log p / n)``
    when the penalty is rate-based too.
    """
    n, p = data.n, data.p
    config = None
    if lam.kind == "cv" or tau.kind == "cv":
        config = make_grids(p, n, folds=min(folds, n), seed=seed)
    if lam.kind == "value":
        lambda_n = lam.value
    elif lam.kind == "rate":
        lambda_n = (DEFAULT_D0 if lam.value is None else lam.value) * rate(p, n)
    else:
        lambda_n = cv_lambda(data, config)
    if tau.kind == "value":
        tau_v = tau.value
    elif tau.kind == "rate":
        tau_v = (DEFAULT_D4 if tau.value is None else tau.value) * lambda_n
    else:
        tau_v = cv_tau(data, lambda_n, config, scale=scale, rule=rule)
    return float(lambda_n), float(tau_v)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n_values: tuple
    replicates: int = 1
    lambda_spec: ParamSpec = field(default_factory=lambda: ParamSpec("cv"))
    tau_spec: ParamSpec = field(default_factory=lambda: ParamSpec("cv"))
    scale: str = CORRELATION
    seed: int = 0
    folds: int = 10
    rule: str = "or"
    output_path: str | None = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if not self.n_values:
            raise ConfigError("n_values must be nonempty")
        if any(int(n) < 2 for n in self.n_values):
            raise ConfigError("every n must be at least 2")
        if self.scale not in (CORRELATION, COVARIANCE):
            raise ConfigError(f"unknown scale {self.scale!r}")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "lambda_spec", ParamSpec.parse(self.lambda_spec))
        object.__setattr__(self, "tau_spec", ParamSpec.parse(self.tau_spec))

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "n_values": list(self.n_values),
            "replicates": self.replicates,
            "lambda": str(self.lambda_spec),
            "tau": str(self.tau_spec),
            "scale": self.scale,
            "seed": self.seed,
            "folds": self.folds,
            "rule": self.rule,
            "output_path": self.output_path,
        }

    @classmethod
    def from_dict(cls, d) -> "ExperimentConfig":
        d = dict(d)
        if "model" not in d:
            raise ConfigError("experiment config needs a 'model' section")
        scale = SCALES.get(str(d.get("scale", "corr")))
        if scale is None:
            raise ConfigError(f"unknown scale {d.get('scale')!r}")
        return cls(
            model=ModelSpec.from_dict(d["model"]),
            n_values=tuple(d.get("n_values", ())),
            replicates=int(d.get("replicates", 1)),
            lambda_spec=ParamSpec.parse(d.get("lambda", "cv")),
            tau_spec=ParamSpec.parse(d.get("tau", "cv")),
            scale=scale,
            seed=int(d.get("seed", 0)),
            folds=int(d.get("folds", 10)),
            rule=str(d.get("rule", "or")),
            output_path=d.get("output_path"),
        )


def _seed_int(master, n, rep) -> int:
    return int(replicate_seed(master, n, rep).generate_state(1)[0])


def run_replicate(config: ExperimentConfig, sigma0, theta0, n: int, rep: int) -> dict:
    """One simulation run; numeric failures are recorded in the ``error`` field."""
    seed = _seed_int(config.seed, n, rep)
    row = {k: "" for k in CSV_FIELDS}
    row.update(seed=seed, n=n, replicate=rep, family=config.model.family)
    start = time.perf_counter()
    try:
        data = sample_gaussian(sigma0, n, seed)
        lam, tau = resolve_tuning(
            data, config.lambda_spec, config.tau_spec, folds=config.folds,
            seed=seed, scale=config.scale, rule=config.rule,
        )
        row.update({"lambda": lam, "tau": tau})
        result = gelato_estimate(data, lam, tau, scale=config.scale, rule=config.rule)
        theta_hat, sigma_hat = to_data_scale(result, data)
        report = error_report(theta_hat, sigma_hat, theta0, sigma0)
        true_edges = EdgeSet.from_support(core.as_array(theta0), atol=ZERO_TOL)
        row.update(
            frob_theta=report.frob_theta,
            frob_sigma=report.frob_sigma,
            kl=report.kl,
            n_edges=len(result.edge_set),
            n_false_edges=len(result.edge_set - true_edges),
        )
    except GelatoError as err:
        row["error"] = f"{type(err).__name__}: {err}".replace("\n", " ")
    row["runtime"] = time.perf_counter() - start
    return row


def _task(args):
    config, sigma0, theta0, n, rep = args
    return run_replicate(config, sigma0, theta0, n, rep)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> list[dict]:
    """All ``(n, replicate)`` runs in a fixed order, optionally on a process pool.

    Every run derives its own seed from ``(config.seed, n, replicate)``, so the
    rows do not depend on ``threads``.
    """
    sigma0, theta0 = config.model.build()
    s0, t0 = core.as_array(sigma0), core.as_array(theta0)
    tasks = [(config, s0, t0, n, rep) for n in config.n_values for rep in range(config.replicates)]
    if threads <= 1 or len(tasks) == 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_task, tasks))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows, fields=CSV_FIELDS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(f, "")) for f in fields])
    return buf.getvalue()


def _quartiles(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"median": None, "q25": None, "q75": None}
    q25, med, q75 = np.percentile(v, [25, 50, 75])
    return {"median": float(med), "q25": float(q25), "q75": float(q75)}


def summarize(config: ExperimentConfig, rows) -> dict:
    """Medians and quartiles per ``(family, n)``, plus essential sparsity of the true model."""
    _, theta0 = config.model.build()
    groups = []
    for n in config.n_values:
        ok = [r for r in rows if r["n"] == n and not r["error"]]
        entry = {
            "family": config.model.family,
            "n": n,
            "runs": sum(1 for r in rows if r["n"] == n),
            "failures": sum(1 for r in rows if r["n"] == n and r["error"]),
            "essential_sparsity_total": essential_sparsity(theta0, n).total,
        }
        for m in SUMMARY_METRICS:
            entry[m] = _quartiles([r[m] for r in ok])
        groups.append(entry)
    return {"schema_version": 1, "config": config.to_dict(), "groups": groups}


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj

