"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 violated modelling assumption.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bounds import (
    MahalanobisSpec,
    mahalanobis_bounds,
    separable_bregman_bounds,
    wasserstein_bounds,
)
from .config import RunConfig, generator_from, load_config
from .core import BoundReport, Method, QuantileGrid, choquet_integral, midpoints, quantile_from_samples
from .errors import AssumptionError, ConsistencyError, InvalidParameterError, NoSolutionError
from .sampling import sample_reference
from .verify import SUITES, run_suite
from .worstcase import solve_lambda

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ASSUMPTION = 0, 1, 2, 3


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x}")
    return format(float(x), ".17g")


def canonical_json(obj) -> str:
    """JSON with sorted keys and 17-significant-digit floats, so that
    parsing and re-emitting reproduces the same bytes."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(json.dumps(str(k)) + ":" + canonical_json(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _sample_aggregate(cfg: RunConfig):
    cloud = sample_reference(cfg.reference_model(), cfg.mc_samples, cfg.seed)
    return cloud, cfg.aggregation().evaluate(cloud.points)


def compute_report(cfg: RunConfig) -> tuple[BoundReport, QuantileGrid]:
    """Build the bound report described by ``cfg``, with the aggregate's quantile grid."""
    gamma = cfg.gamma()
    agg = cfg.aggregation()
    cloud, values = _sample_aggregate(cfg)
    f_agg = quantile_from_samples(values, cfg.grid_M)
    return _bounds_for(cfg, gamma, agg, cloud, f_agg), f_agg


def _bounds_for(cfg, gamma, agg, cloud, f_agg) -> BoundReport:
    kind, u = cfg.uncertainty_kind, cfg.uncertainty
    if kind == "wasserstein":
        return wasserstein_bounds(f_agg, gamma, agg, u["epsilon"], K=u.get("K"), beta_norm=u.get("beta_norm"))
    if kind == "mahalanobis":
        return mahalanobis_bounds(f_agg, gamma, agg, MahalanobisSpec(u["q_diag"]), cfg.budget(),
                                  scaling=u.get("scaling", "squared"))
    if kind == "separable":
        phis = [generator_from(p) for p in u["phis"]]
        if len(phis) != cloud.n or len(u["beta"]) != cloud.n:
            raise InvalidParameterError(f"separable section needs {cloud.n} generators and weights")
        marginals = [quantile_from_samples(cloud.points[:, k], cfg.grid_M) for k in range(cloud.n)]
        return separable_bregman_bounds(marginals, gamma, phis, u["beta"], cfg.budget())
    phi = generator_from(u["phi"])
    budget = cfg.budget()
    ref = choquet_integral(f_agg, gamma)
    if budget == 0:
        return BoundReport(ref, ref, ref, Method.COMPOSABLE_UPPER_ONLY, 0.0, "divergence budget",
                           lower_curve=f_agg, upper_curve=f_agg, upper_pre_projection=f_agg.values)
    sol = solve_lambda(f_agg, gamma, phi, budget)
    # the reference law itself lies in the ball, so its risk is a valid lower bound
    return BoundReport(ref, ref, sol.worst_risk, Method.COMPOSABLE_UPPER_ONLY, budget, "divergence budget",
                       upper_lambda=sol.lambda_star, lower_curve=f_agg, upper_curve=sol.worst_curve,
                       upper_pre_projection=sol.pre_projection)


def report_payload(report: BoundReport, cfg: RunConfig) -> dict:
    payload = report.summary()
    payload.update(grid_M=cfg.grid_M, mc_samples=cfg.mc_samples, seed=cfg.seed)
    if report.upper_curve is not None:
        payload["curves"] = {
            "lower": report.lower_curve.values,
            "upper": report.upper_curve.values,
            "upper_pre_projection": report.upper_pre_projection,
        }
    return payload


def _metric_rows(payload: dict):
    for key in ("method", "units", "epsilon", "reference_risk", "lower", "upper",
                "lower_lambda", "upper_lambda", "grid_M", "mc_samples", "seed"):
        value = payload[key]
        if isinstance(value, (tuple, list)):
            for i, v in enumerate(value, 1):
                yield f"{key}_{i}", v
        else:
            yield key, value


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _write(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="\n")


def cmd_bound(args) -> int:
    cfg = load_config(args.config, seed=args.seed, grid=args.grid, samples=args.samples)
    report, _ = compute_report(cfg)
    payload = report_payload(report, cfg)
    if args.format == "json":
        _write(canonical_json(payload) + "\n", args.out)
    else:
        lines = ["metric,value"] + [f"{k},{_cell(v)}" for k, v in _metric_rows(payload)]
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_worst_case(args) -> int:
    cfg = load_config(args.config, seed=args.seed, grid=args.grid, samples=args.samples)
    if cfg.uncertainty_kind == "separable":
        raise InvalidParameterError("separable bounds combine per-factor solutions and have no single curve")
    report, ref = compute_report(cfg)
    cols = [midpoints(cfg.grid_M), ref.values, report.lower_curve.values, report.upper_curve.values,
            np.asarray(report.upper_pre_projection)]
    lines = ["u,reference_quantile,lower_curve,upper_curve,pre_projection_upper"]
    lines += [",".join(format_float(v) for v in row) for row in zip(*cols)]
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = load_config(args.config, seed=args.seed, grid=args.grid, samples=args.samples)
    _, values = _sample_aggregate(cfg)
    _write("aggregate\n" + "".join(format_float(v) + "\n" for v in values), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise InvalidParameterError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    checks = run_suite(args.suite, args.seed if args.seed is not None else 0)
    for check in checks:
        print(check.line(args.suite))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="drobounds", description="Worst-case risk bounds under distributional uncertainty.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON run configuration")
            p.add_argument("--out", help="output file (default: stdout)")
            p.add_argument("--grid", type=int, help="override grid resolution")
            p.add_argument("--samples", type=int, help="override Monte Carlo sample size")
        p.add_argument("--seed", type=int, help="override the random seed")

    p = sub.add_parser("bound", help="lower and upper worst-case bounds")
    common(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("worst-case", help="worst-case quantile curves as CSV")
    common(p)
    p.set_defaults(func=cmd_worst_case)

    p = sub.add_parser("sample", help="aggregated Monte Carlo sample as CSV")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="run a self-check suite")
    p.add_argument("--suite", required=True)
    common(p, needs_config=False)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AssumptionError as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except InvalidParameterError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoSolutionError, ConsistencyError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
