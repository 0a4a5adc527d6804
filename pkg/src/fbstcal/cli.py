"""Command-line interface.

    fbstcal evidence --n 4 --xbar 1
    fbstcal calibrate --n 50 --v2 1 --format json
    fbstcal table --n-list 10,50,100 --v2-list 0.1,1 --output table.csv
    fbstcal simulate --n 50 --k 0.18 --draws 1000000 --seed 7

Exit codes: 0 success, 2 usage error, 3 numerical non-convergence,
4 I/O error.
"""

import argparse
import csv
import dataclasses
import datetime
import io
import json
import math
import sys

import numpy as np

from fbstcal import __version__
from fbstcal.calibrate import (
    CalibrationError,
    OptimizerOptions,
    cutoff_table,
    error_vs_n,
    optimal_cutoff,
    risk_curve,
)
from fbstcal.model import PriorSpec, TestConfig, evidence
from fbstcal.montecarlo import estimate_expected_type2, estimate_rejection_rate
from fbstcal.risk import (
    QuadratureError,
    QuadratureOptions,
    Weights,
    expected_type2_error,
    power,
    type1_error,
)

EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4

TABLE_N = (10, 50, 100, 150, 200, 250, 300, 350, 400, 450, 500, 1000, 1500, 2000)
TABLE_V2 = (0.1, 1.0)


# argparse value types ----------------------------------------------------

def _finite(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return value


def _positive(text):
    value = _finite(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


def _cutoff(text):
    value = _finite(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1]: {text!r}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"must be an unsigned 64-bit integer: {text!r}")
    return value


def _list_of(item_type):
    def parse(text):
        items = [s for s in text.split(",") if s.strip()]
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        return [item_type(s.strip()) for s in items]

    return parse


# output -------------------------------------------------------------------

def _csv_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else "%.12g" % value
    return str(value)


def render_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(rows[0]))
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row.values()])
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_json(payload):
    if isinstance(payload, list):
        payload = [{k: _json_value(v) for k, v in row.items()} for row in payload]
    else:
        payload = {k: _json_value(v) for k, v in payload.items()}
    return json.dumps(payload, indent=2) + "\n"


def _as_dict(record):
    if dataclasses.is_dataclass(record):
        return dataclasses.asdict(record)
    if hasattr(record, "_asdict"):
        return dict(record._asdict())
    return dict(record)


def _manifest(args):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "output", "manifest")}
    return {
        "command": args.command,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "argv": list(args.argv),
        "tool_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def emit(args, payload, single):
    """Write a result (single=True) or a list of rows in the chosen format."""
    if single:
        text = render_json(payload) if args.format == "json" else render_csv([payload])
    else:
        text = render_json(payload) if args.format == "json" else render_csv(payload)

    manifest_path = args.manifest or (args.output + ".manifest.json" if args.output else None)
    try:
        if args.output:
            with open(args.output, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if manifest_path:
            with open(manifest_path, "w") as fh:
                json.dump(_manifest(args), fh, indent=2)
                fh.write("\n")
    except OSError as exc:
        print(f"fbstcal: cannot write output: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


# option groups --------------------------------------------------------------

def _model_args(p, with_n=True):
    if with_n:
        p.add_argument("--n", type=_positive_int, required=True, help="sample size")
    p.add_argument("--v2", type=_positive, default=1.0, help="prior variance of theta")
    p.add_argument("--m", type=_finite, default=0.0, help="prior mean of theta")
    p.add_argument("--sigma2", type=_positive, default=1.0, help="known sampling variance")
    p.add_argument("--theta0", type=_finite, default=0.0, help="hypothesised mean")


def _design_arg(p):
    p.add_argument(
        "--design-v2", type=_positive, default=None,
        help="variance of the prior that averages the type II error (default: --v2)",
    )


def _weight_args(p):
    p.add_argument("--a", type=_positive, default=1.0, help="type I error weight")
    p.add_argument("--b", type=_positive, default=1.0, help="expected type II error weight")


def _quad_args(p):
    p.add_argument("--quad-scheme", choices=("gauss_hermite", "adaptive"), default="gauss_hermite")
    p.add_argument("--quad-order", type=_positive_int, default=128)
    p.add_argument("--abs-tol", type=_positive, default=1e-10)


def _optimizer_args(p):
    p.add_argument("--grid-points", type=_positive_int, default=1000)
    p.add_argument("--k-tol", type=_positive, default=1e-8)
    p.add_argument("--k-min", type=_positive, default=1e-9)
    p.add_argument("--k-max", type=_positive, default=1 - 1e-9)
    p.add_argument("--max-evaluations", type=_positive_int, default=5000)


def _output_args(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="output file (default: stdout)")
    p.add_argument("--manifest", default=None,
                   help="manifest path (default: OUTPUT.manifest.json when --output is set)")
    p.add_argument("--workers", type=_positive_int, default=1)


def _config(args, n=None):
    return TestConfig.of(
        n=n if n is not None else args.n, v2=args.v2, m=args.m,
        sigma2=args.sigma2, theta0=args.theta0,
    )


def _design(args):
    return PriorSpec(m=args.m, v2=args.design_v2) if args.design_v2 is not None else None


def _quad(args):
    return QuadratureOptions(scheme=args.quad_scheme, order=args.quad_order, abs_tol=args.abs_tol)


def _optimizer(args):
    return OptimizerOptions(
        grid_points=args.grid_points, k_tol=args.k_tol, k_min=args.k_min,
        k_max=args.k_max, max_evaluations=args.max_evaluations,
    )


# commands -----------------------------------------------------------------

def cmd_evidence(args):
    print("%.10g" % evidence(_config(args), args.xbar))
    return 0


def cmd_power(args):
    config = _config(args)
    theta = config.sampling.theta0 if args.theta is None else args.theta
    emit(args, {"k": args.k, "theta": theta, "power": power(args.k, theta, config)}, single=True)
    return 0


def cmd_alpha(args):
    emit(args, {"k": args.k, "alpha": type1_error(args.k, _config(args))}, single=True)
    return 0


def cmd_beta_bar(args):
    value = expected_type2_error(args.k, _config(args), _quad(args), _design(args))
    emit(args, {"k": args.k, "beta_bar": value}, single=True)
    return 0


def cmd_calibrate(args):
    status = 0
    try:
        result = optimal_cutoff(_config(args), Weights(args.a, args.b), _optimizer(args),
                                _quad(args), _design(args))
    except CalibrationError as exc:
        print(f"fbstcal: {exc}", file=sys.stderr)
        result, status = exc.result, EXIT_NONCONVERGENCE
    emit(args, _as_dict(result), single=True)
    return status


def cmd_table(args):
    base = _config(args, n=1)
    rows = cutoff_table(
        args.n_list, args.v2_list, base, Weights(args.a, args.b), _optimizer(args),
        _quad(args), design_v2_list=args.design_v2_list, workers=args.workers,
    )
    emit(args, [_as_dict(r) for r in rows], single=False)
    return 0 if all(r.status == "ok" for r in rows) else EXIT_NONCONVERGENCE


def cmd_risk_curve(args):
    grid = np.linspace(args.k_min, args.k_max, args.grid)
    points = risk_curve(_config(args), grid, Weights(args.a, args.b), _quad(args), _design(args))
    emit(args, [_as_dict(p) for p in points], single=False)
    return 0


def cmd_error_vs_n(args):
    rows = error_vs_n(args.n_list, _config(args, n=1), Weights(args.a, args.b),
                      _optimizer(args), _quad(args), _design(args), workers=args.workers)
    emit(args, [_as_dict(r) for r in rows], single=False)
    return 0


def cmd_simulate(args):
    config = _config(args)
    if args.quantity == "type2":
        est = estimate_expected_type2(args.k, config, args.draws, args.seed,
                                      workers=args.workers, design_prior=_design(args))
        theta = None
    else:
        theta = config.sampling.theta0 if args.theta is None else args.theta
        est = estimate_rejection_rate(args.k, theta, config, args.draws, args.seed,
                                      workers=args.workers)
    record = {"quantity": args.quantity, "k": args.k, "theta": theta}
    record.update(_as_dict(est))
    if theta is None:
        record["theta"] = float("nan")
    emit(args, record, single=True)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fbstcal",
        description="FBST evidence and sample-size dependent cut-offs for a normal mean.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evidence", help="evidence in favour of H0 at an observed mean")
    _model_args(p)
    p.add_argument("--xbar", type=_finite, required=True, help="observed sample mean")
    p.set_defaults(func=cmd_evidence)

    p = sub.add_parser("power", help="rejection probability at a true mean")
    _model_args(p)
    p.add_argument("--k", type=_cutoff, required=True)
    p.add_argument("--theta", type=_finite, default=None, help="true mean (default: theta0)")
    _output_args(p)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("alpha", help="type I error probability")
    _model_args(p)
    p.add_argument("--k", type=_cutoff, required=True)
    _output_args(p)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("beta-bar", help="expected type II error probability")
    _model_args(p)
    _design_arg(p)
    _quad_args(p)
    p.add_argument("--k", type=_cutoff, required=True)
    _output_args(p)
    p.set_defaults(func=cmd_beta_bar)

    p = sub.add_parser("calibrate", help="optimal cut-off for one sample size")
    _model_args(p)
    _design_arg(p)
    _weight_args(p)
    _optimizer_args(p)
    _quad_args(p)
    _output_args(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("table", help="optimal cut-offs over sample sizes and prior variances")
    _model_args(p, with_n=False)
    p.add_argument("--n-list", type=_list_of(_positive_int), default=list(TABLE_N))
    p.add_argument("--v2-list", type=_list_of(_positive), default=list(TABLE_V2))
    p.add_argument("--design-v2-list", type=_list_of(_positive), default=None,
                   help="design prior variance paired with each --v2-list entry")
    _weight_args(p)
    _optimizer_args(p)
    _quad_args(p)
    _output_args(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("risk-curve", help="alpha, beta_bar and objective on a grid of k")
    _model_args(p)
    _design_arg(p)
    _weight_args(p)
    p.add_argument("--grid", type=_positive_int, default=200, help="number of grid points")
    p.add_argument("--k-min", type=_cutoff, default=1e-9)
    p.add_argument("--k-max", type=_cutoff, default=1 - 1e-9)
    _quad_args(p)
    _output_args(p)
    p.set_defaults(func=cmd_risk_curve)

    p = sub.add_parser("error-vs-n", help="error rates at the optimal cut-off for each n")
    _model_args(p, with_n=False)
    _design_arg(p)
    p.add_argument("--n-list", type=_list_of(_positive_int), default=list(TABLE_N))
    _weight_args(p)
    _optimizer_args(p)
    _quad_args(p)
    _output_args(p)
    p.set_defaults(func=cmd_error_vs_n)

    p = sub.add_parser("simulate", help="Monte Carlo rejection or type II error rate")
    _model_args(p)
    _design_arg(p)
    p.add_argument("--quantity", choices=("rejection", "type2"), default="rejection")
    p.add_argument("--k", type=_cutoff, required=True)
    p.add_argument("--theta", type=_finite, default=None,
                   help="true mean for --quantity rejection (default: theta0)")
    p.add_argument("--draws", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    _output_args(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except QuadratureError as exc:
        print(f"fbstcal: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
