"""Command-line front end.

Subcommands: ``fit``, ``select``, ``verify``, ``example``, ``simulate``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 rank deficiency,
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import ibl, linreg
from .blackbox import DISTRIBUTIONS, NoiseSpec, generate_dataset, parse_blackbox, uniform_inputs
from .data import DataError, Dataset, four_point_example, read_csv, write_csv
from .estimate import IblSpec, LinearSpec, estimate_sigma_sq_residual, parse_model_spec, select_model
from .linalg import RankDeficiencyError
from .simharness import CHECK_NAMES, HarnessConfig, run_suite

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4
CURVE_POINTS = 201


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_source(p, need_model_data=True):
    p.add_argument("--data", help="CSV with header x1..xr,y")
    p.add_argument("--blackbox", help="zero | sin | poly:c0,c1,... (simulate the data instead)")
    p.add_argument("--n", type=int, default=24, help="experiments to simulate with --blackbox")
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default="normal")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvdecomp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit one model and report training error and instability")
    _add_source(p)
    p.add_argument("--model", required=True, help="lr:R | ibl:k=K[,uniform|similarity] | m3:THRESHOLD")
    p.add_argument("--weighting", choices=ibl.WEIGHTINGS, help="override the weighting of an ibl model")
    p.add_argument("--sigma", type=float, help="noise scale (also used to simulate with --blackbox)")
    p.add_argument("--sigma-sq", type=float, help="noise variance for the instability value")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("select", help="choose the candidate with the smallest CVC")
    _add_source(p)
    p.add_argument("--grid", action="append",
                   help="candidate range such as lr:1-4, ibl:1-4 or m3:0.8 (repeatable; default lr:1-4 ibl:1-4)")
    p.add_argument("--weighting", choices=ibl.WEIGHTINGS, default="uniform", help="weighting for ibl candidates")
    p.add_argument("--sigma", type=float)
    p.add_argument("--sigma-sq", type=float)
    p.add_argument("--estimate-sigma", type=int, metavar="R",
                   help="estimate sigma^2 as the residual mean square of an R-term polynomial fit")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out")

    p = sub.add_parser("verify", help="check the expected-error identities by simulation")
    d = HarnessConfig()
    p.add_argument("--blackbox", default=d.blackbox)
    p.add_argument("--n", type=int, default=d.n)
    p.add_argument("--sigma", type=float, default=d.sigma)
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default=d.distribution)
    p.add_argument("--trials", type=int, default=d.trials)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--r", type=int, default=d.r, help="terms for the least-squares checks")
    p.add_argument("--k", type=int, default=d.k, help="neighborhood size for the k-NN check")
    p.add_argument("--weighting", choices=ibl.WEIGHTINGS, default=d.weighting)
    p.add_argument("--threshold", type=float, default=d.threshold, help="similarity threshold for m3")
    p.add_argument("--checks", default=",".join(CHECK_NAMES), help="comma-separated subset of " + ",".join(CHECK_NAMES))
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out")

    p = sub.add_parser("example", help="reproduce the four-point worked example")
    p.add_argument("--sigma-sq", type=float, help="substitute a noise level into the CVC column")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out", help="directory for the table and the prediction-curve CSVs")

    p = sub.add_parser("simulate", help="generate a dataset from a black box")
    p.add_argument("--blackbox", required=True)
    p.add_argument("--n", type=int, default=24)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default="normal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    return parser


# -- helpers ---------------------------------------------------------------

def _load(args) -> Dataset:
    if (args.data is None) == (args.blackbox is None):
        raise UsageError("give exactly one of --data or --blackbox")
    if args.data is not None:
        try:
            return read_csv(args.data)
        except OSError as exc:
            raise DataError(f"cannot read {args.data}: {exc.strerror or exc}") from None
    sigma = getattr(args, "sigma", None)
    noise = NoiseSpec(1.0 if sigma is None else sigma, args.distribution)
    if args.n < 1:
        raise UsageError("--n must be positive")
    return generate_dataset(_box(args.blackbox), uniform_inputs(args.n), noise, args.seed)


def _box(spec):
    try:
        return parse_blackbox(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sigma_sq(args) -> Optional[float]:
    given = [v for v in (args.sigma, args.sigma_sq) if v is not None]
    if len(given) > 1:
        raise UsageError("give at most one of --sigma and --sigma-sq")
    if args.sigma is not None:
        if args.sigma < 0:
            raise UsageError("--sigma must be non-negative")
        return args.sigma ** 2
    if args.sigma_sq is not None and args.sigma_sq < 0:
        raise UsageError("--sigma-sq must be non-negative")
    return args.sigma_sq


def _spec(text, weighting=None):
    try:
        spec = parse_model_spec(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if weighting is not None and isinstance(spec, IblSpec) and spec.threshold is None:
        spec = IblSpec(spec.k, weighting, spec.measure)
    return spec


def _grid(items, weighting) -> list:
    specs = []
    for item in items or ["lr:1-4", "ibl:1-4"]:
        kind, _, rng = item.partition(":")
        lo, dash, hi = rng.partition("-")
        if kind in ("lr", "ibl") and dash:
            try:
                values = range(int(lo), int(hi) + 1)
            except ValueError:
                raise UsageError(f"bad grid range {item!r}") from None
            for v in values:
                specs.append(LinearSpec(v) if kind == "lr" else IblSpec(v, weighting))
        else:
            specs.append(_spec(item, weighting if kind == "ibl" else None))
    return specs


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _iv(x: ibl.InstabilityInterval):
    return x.lower if x.is_point else [x.lower, x.upper]


# -- subcommands -------------------------------------------------------------

def cmd_fit(args) -> int:
    ds = _load(args)
    spec = _spec(args.model, args.weighting)
    model = spec(ds.X, ds.y)
    e_t = model.predict(ds.X) - ds.y
    sse = float(e_t @ e_t)
    coef = spec.instability_coefficient(ds.n)
    s2 = _sigma_sq(args)
    if isinstance(spec, LinearSpec):
        params = {"coefficients": model.coefficients.tolist(), "basis": model.basis.describe()}
    else:
        params = {"k": model.k, "weighting": model.weighting, "measure": model.measure,
                  "stored_instances": model.n}
        if spec.threshold is not None:
            params["threshold"] = spec.threshold
    inst = None if s2 is None else [coef.lower * s2, coef.upper * s2]
    report = {
        "model": spec.id,
        "n": ds.n,
        "parameters": params,
        "sse": sse,
        "norm": math.sqrt(sse),
        "instability_coefficient": _iv(coef),
        "instability": None if inst is None else (inst[0] if coef.is_point else inst),
        "sigma_sq": s2,
    }
    if args.format == "json":
        _emit(json.dumps(report, indent=2), args.out)
        return EXIT_OK
    lines = [f"model: {spec.id}  (n = {ds.n})"]
    for key, val in params.items():
        if key == "coefficients":
            val = " ".join(f"{v:.6g}" for v in val)
        lines.append(f"  {key}: {val}")
    lines.append(f"training sse ||e_t||^2: {sse:.4f}")
    lines.append(f"training error ||e_t||: {math.sqrt(sse):.4f}")
    c = report["instability_coefficient"]
    lines.append(f"expected ||e_s||^2: {c:.4g} * sigma^2" if coef.is_point
                 else f"expected ||e_s||^2: between {c[0]:.4g} and {c[1]:.4g} * sigma^2")
    if s2 is not None:
        lines.append(f"  at sigma^2 = {s2:g}: {report['instability']}")
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_select(args) -> int:
    ds = _load(args)
    specs = _grid(args.grid, args.weighting)
    s2 = _sigma_sq(args)
    source = "given"
    if args.estimate_sigma is not None:
        if s2 is not None:
            raise UsageError("--estimate-sigma conflicts with --sigma / --sigma-sq")
        s2 = estimate_sigma_sq_residual(ds.X, ds.y, args.estimate_sigma)
        source = f"estimated (residual mean square, r={args.estimate_sigma})"
    if s2 is None:
        raise UsageError("sigma^2 is required: pass --sigma, --sigma-sq or --estimate-sigma R")
    report = select_model(specs, ds, s2, source)
    _emit(report.to_json(indent=2) if args.format == "json" else report.to_table(), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    which = [c.strip() for c in args.checks.split(",") if c.strip()]
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    config = HarnessConfig(blackbox=args.blackbox, n=args.n, sigma=args.sigma, distribution=args.distribution,
                           trials=args.trials, seed=args.seed, r=args.r, k=args.k, weighting=args.weighting,
                           threshold=args.threshold)
    _box(args.blackbox)
    try:
        checks, angle = run_suite(config, which)
    except RankDeficiencyError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    passed = all(c.passed for c in checks)
    if args.format == "json":
        doc = {"checks": [c.to_dict() for c in checks],
               "angle": None if angle is None else angle.to_dict(),
               "all_passed": passed}
        _emit(json.dumps(doc, indent=2), args.out)
    else:
        lines = [c.summary() for c in checks]
        if angle is not None:
            lines.append(angle.summary())
        lines.append("ALL PASS" if passed else "SOME CHECKS FAILED")
        _emit("\n".join(lines), args.out)
    return EXIT_OK if passed else EXIT_VERIFY


def example_curves(dataset: Optional[Dataset] = None, points: int = CURVE_POINTS) -> dict:
    """Predictions of LR1..LR4 and IBL1..IBL4 on an even grid over [0, 1]."""
    ds = dataset or four_point_example()
    grid = np.linspace(0.0, 1.0, points)
    lr = {f"LR{r}": LinearSpec(r)(ds.X, ds.y).predict(grid[:, None]) for r in range(1, 5)}
    knn = {f"IBL{k}": IblSpec(k)(ds.X, ds.y).predict(grid[:, None]) for k in range(1, 5)}
    return {"x": grid, "linear_regression": lr, "instance_based": knn}


def _curve_csv(x, columns: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x"] + list(columns))
    for i, xi in enumerate(x):
        w.writerow([repr(float(xi))] + [repr(float(col[i])) for col in columns.values()])
    return buf.getvalue()


def example_report(sigma_sq: Optional[float] = None):
    ds = four_point_example()
    specs = [LinearSpec(r) for r in range(1, 5)] + [IblSpec(k) for k in range(1, 5)]
    report = select_model(specs, ds, 0.0 if sigma_sq is None else sigma_sq)
    rows = [{"model": r.id, "sse": r.sse, "instability_coefficient": r.instability_coef.value,
             "cvc": None if sigma_sq is None else r.cvc.value} for r in report.rows]
    return ds, rows, report


def cmd_example(args) -> int:
    if args.sigma_sq is not None and args.sigma_sq < 0:
        raise UsageError("--sigma-sq must be non-negative")
    ds, rows, report = example_report(args.sigma_sq)
    lines = ["model  sse(||e_t||^2)  E||e_s||^2       estimated E||e_c||^2"]
    for row in rows:
        coef = f"{row['instability_coefficient']:.4g}*s2"
        if row["cvc"] is None:
            cvc = f"{row['sse']:.4f} + {coef}"
        else:
            cvc = f"{row['cvc']:.4f}"
        lines.append(f"{row['model']:<6} {row['sse']:<15.4f} {coef:<16} {cvc}")
    if args.sigma_sq is not None:
        tie = f" (tied: {', '.join(report.tied)})" if len(report.tied) > 1 else ""
        lines.append(f"minimum CVC at sigma^2 = {args.sigma_sq:g}: {report.chosen}{tie}")
    table = "\n".join(lines)
    curves = example_curves(ds)
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "figure1_linear_regression.csv"), "w") as fh:
            fh.write(_curve_csv(curves["x"], curves["linear_regression"]))
        with open(os.path.join(args.out, "figure2_instance_based.csv"), "w") as fh:
            fh.write(_curve_csv(curves["x"], curves["instance_based"]))
        write_csv(ds, os.path.join(args.out, "data.csv"))
    if args.format == "json":
        doc = {"x": ds.X[:, 0].tolist(), "y": ds.y.tolist(), "sigma_sq": args.sigma_sq, "rows": rows,
               "curves": {"x": curves["x"].tolist(),
                          **{k: v.tolist() for k, v in curves["linear_regression"].items()},
                          **{k: v.tolist() for k, v in curves["instance_based"].items()}}}
        text = json.dumps(doc, indent=2)
    else:
        text = table
    _emit(text, os.path.join(args.out, "table." + ("json" if args.format == "json" else "txt"))
          if args.out else None)
    if args.out is not None:
        _emit(table, None)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive")
    try:
        noise = NoiseSpec(args.sigma, args.distribution)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = generate_dataset(_box(args.blackbox), uniform_inputs(args.n), noise, args.seed)
    if args.format == "json":
        doc = {"blackbox": args.blackbox, "sigma": args.sigma, "distribution": args.distribution,
               "seed": args.seed, "X": ds.X.tolist(), "y": ds.y.tolist()}
        _emit(json.dumps(doc, indent=2), args.out)
    else:
        buf = io.StringIO()
        write_csv(ds, buf)
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "verify": cmd_verify,
            "example": cmd_example, "simulate": cmd_simulate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"cvdecomp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cvdecomp {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RankDeficiencyError as exc:
        print(f"cvdecomp {args.command}: rank deficiency: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"cvdecomp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
