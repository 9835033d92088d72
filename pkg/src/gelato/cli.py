"""Command-line interface: ``gelato estimate | simulate | diagnose``.

Exit codes: 0 success, 2 configuration or input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import core
from .core import DataSet, SymMatrix, standardize
from .diagnostics import essential_sparsity
from .exceptions import ConfigError, CsvParseError, GelatoError, NumericFailureError
from .experiment import (
    SCALES,
    ExperimentConfig,
    ParamSpec,
    dumps,
    resolve_tuning,
    rows_to_csv,
    run_experiment,
    summarize,
)
from .mle import gelato_estimate, to_data_scale
from .simulate import FAMILIES, ModelSpec

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

logger = logging.getLogger("gelato")


def read_csv(path):
    """``(header or None, n x p array)`` from a numeric CSV file.

    A first row with any non-numeric field is taken as a header.  Empty or
    non-finite fields and ragged rows are rejected with their line number.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    header, rows, width = None, [], None
    with fh:
        reader = csv.reader(fh)
        try:
            for record in reader:
                line = reader.line_num
                fields = [f.strip() for f in record]
                if not fields or fields == [""]:
                    continue
                if header is None and not rows and not all(map(_is_number, fields)):
                    header = fields
                    width = len(fields)
                    continue
                if width is None:
                    width = len(fields)
                if len(fields) != width:
                    raise CsvParseError(f"expected {width} fields, found {len(fields)}", line)
                row = []
                for k, f in enumerate(fields):
                    if f == "":
                        raise CsvParseError(f"missing value in column {k + 1}", line)
                    try:
                        v = float(f)
                    except ValueError:
                        raise CsvParseError(f"non-numeric value {f!r} in column {k + 1}", line) from None
                    if not math.isfinite(v):
                        raise CsvParseError(f"non-finite value {f!r} in column {k + 1}", line)
                    row.append(v)
                rows.append(row)
        except csv.Error as err:
            raise CsvParseError(str(err), reader.line_num) from None
        except UnicodeDecodeError:
            raise CsvParseError("file is not valid UTF-8") from None
    if not rows:
        raise CsvParseError("no data rows")
    return header, np.array(rows, dtype=float)


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _scale(name):
    try:
        return SCALES[name]
    except KeyError:
        raise ConfigError(f"unknown scale {name!r}; use corr or cov") from None


def cmd_estimate(args) -> int:
    header, x = read_csv(args.input)
    data = standardize(DataSet.from_array(x))
    scale = _scale(args.scale)
    lam_spec, tau_spec = ParamSpec.parse(args.lambda_), ParamSpec.parse(args.tau)
    lam, tau = resolve_tuning(
        data, lam_spec, tau_spec, folds=args.folds, seed=args.seed, scale=scale, rule=args.rule
    )
    result = gelato_estimate(data, lam, tau, scale=scale, rule=args.rule)
    theta, sigma = to_data_scale(result, data)
    out = {
        "schema_version": 1,
        "n": data.n,
        "p": data.p,
        "variables": header,
        "scale": scale,
        "rule": args.rule,
        "lambda": {"value": lam, "source": str(lam_spec)},
        "tau": {"value": tau, "source": str(tau_spec)},
        "edges": result.edge_set.sorted_list(),
        "theta": theta,
        "sigma": sigma,
        "kkt_violation": result.max_kkt_violation,
        "iterations": result.iterations,
        "column_means": data.column_means,
        "column_scales": data.column_scales,
    }
    _write(dumps(out), args.output)
    return EXIT_OK


def _model_from_args(args) -> ModelSpec:
    if args.model is None:
        raise ConfigError("--model is required")
    if args.p is None:
        raise ConfigError("--p is required")
    return ModelSpec(
        family=args.model,
        p=args.p,
        block_size=args.block_size,
        pi=args.pi,
        seed=args.model_seed,
    )


def _n_values(text):
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"--n expects comma-separated integers, got {text!r}") from None


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as err:
            raise ConfigError(f"cannot read {args.config}: {err.strerror}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"{args.config}: invalid JSON at line {err.lineno}: {err.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError("experiment config must be a JSON object")
        return ExperimentConfig.from_dict(raw)
    if args.n is None:
        raise ConfigError("--n is required")
    return ExperimentConfig(
        model=_model_from_args(args),
        n_values=_n_values(args.n),
        replicates=args.replicates,
        lambda_spec=args.lambda_,
        tau_spec=args.tau,
        scale=_scale(args.scale),
        seed=args.seed,
        folds=args.folds,
        rule=args.rule,
        output_path=args.output,
    )


def cmd_simulate(args) -> int:
    config = _experiment_config(args)
    output = args.output or config.output_path
    rows = run_experiment(config, threads=args.threads or os.cpu_count() or 1)
    _write(rows_to_csv(rows), output)
    if output and output != "-":
        stem = Path(output)
        summary = stem.with_name(stem.stem + ".summary.json")
        summary.write_text(dumps(summarize(config, rows)), encoding="utf-8")
        # timings vary run to run, so they live beside the deterministic CSV
        stem.with_name(stem.stem + ".runtime.csv").write_text(
            rows_to_csv(rows, ("n", "replicate", "runtime")), encoding="utf-8"
        )
    failed = sum(1 for r in rows if r["error"])
    if failed:
        logger.warning("%d of %d replicates failed; see the error column", failed, len(rows))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if args.input:
        _, t = read_csv(args.input)
        theta0 = SymMatrix(t, core.PRECISION)
    else:
        _, theta0 = _model_from_args(args).build()
    sigma0 = core.inverse(theta0)
    report = essential_sparsity(theta0, args.n)
    eig = np.linalg.eigvalsh(core.as_array(sigma0))
    out = {
        "schema_version": 1,
        "n": args.n,
        "p": theta0.p,
        "sparsity": report.to_dict(),
        "sigma0_eigenvalues": {"min": float(eig[0]), "max": float(eig[-1])},
    }
    _write(dumps(out), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gelato",
        description="Graph selection by thresholded nodewise lasso with constrained MLE refitting.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def tuning(p):
        p.add_argument("--lambda", dest="lambda_", default="cv",
                       help="penalty: a number, 'cv' or 'rate:<d0>' (default cv)")
        p.add_argument("--tau", default="cv",
                       help="threshold: a number, 'cv' or 'rate:<D4>' (default cv)")
        p.add_argument("--scale", default="corr", choices=("corr", "cov"))
        p.add_argument("--rule", default="or", choices=("or", "and"))
        p.add_argument("--folds", type=int, default=10)
        p.add_argument("--seed", type=int, default=0)

    def model(p):
        p.add_argument("--model", choices=FAMILIES)
        p.add_argument("--p", type=int)
        p.add_argument("--block-size", type=int)
        p.add_argument("--pi", type=float)
        p.add_argument("--model-seed", type=int, default=0,
                       help="seed of the random_precision draw")

    est = sub.add_parser("estimate", help="estimate a graph and precision matrix from a CSV file")
    est.add_argument("--input", required=True, help="CSV, rows are observations")
    est.add_argument("--output", help="JSON destination (default stdout)")
    tuning(est)
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    sim.add_argument("--config", help="JSON experiment config (replaces the model and tuning flags)")
    sim.add_argument("--output", help="per-replicate CSV destination (default stdout)")
    model(sim)
    sim.add_argument("--n", help="comma-separated sample sizes")
    sim.add_argument("--replicates", type=int, default=1)
    sim.add_argument("--threads", type=int, default=None,
                     help="worker processes (default: available CPUs)")
    tuning(sim)
    sim.set_defaults(func=cmd_simulate)

    diag = sub.add_parser("diagnose", help="essential sparsity of a true precision matrix")
    diag.add_argument("--input", help="CSV holding the precision matrix")
    diag.add_argument("--output", help="JSON destination (default stdout)")
    model(diag)
    diag.add_argument("--n", type=int, required=True)
    diag.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except NumericFailureError as err:
        _report(err, getattr(args, "output", None) if args.command == "estimate" else None)
        return EXIT_NUMERIC
    except (GelatoError, ValueError) as err:
        _report(err, None)
        return EXIT_CONFIG


def _report(err, output):
    payload = {"schema_version": 1, "error": {"type": type(err).__name__, "message": str(err)}}
    print(f"gelato: error: {err}", file=sys.stderr)
    if output and output != "-":
        Path(output).write_text(dumps(payload), encoding="utf-8")
    else:
        sys.stdout.write(dumps(payload))


if __name__ == "__main__":
    sys.exit(main())
