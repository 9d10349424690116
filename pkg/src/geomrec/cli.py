"""``geomrec`` command-line interface.

Exit codes: 0 success, 1 usage or parameter error, 2 no observation above
the threshold, 3 estimator does not exist, 4 I/O error, 5 parse error,
6 computation failure (all trials failed, too few points, degenerate data).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from decimal import Decimal, InvalidOperation

import numpy as np

from . import __version__
from .core import GeomRecordParams, extract, read_observations
from .distributions import parse_distribution
from .errors import (
    AggregationError,
    DegenerateSampleError,
    DomainError,
    EmptySampleError,
    GeomRecError,
    MLENonexistenceError,
    ParameterError,
)
from .estimators import mle_complete, mle_practical
from .finance import InsufficientDataError, delta_scan, esf_fit, prices_to_returns, read_price_csv
from .montecarlo import TrialConfig, clt_study, default_threads, replicate, trace_paths

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_ACTIVATION = 2
EXIT_NO_MLE = 3
EXIT_IO = 4
EXIT_PARSE = 5
EXIT_FAILURE = 6


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> list[float]:
    """``start:end:step`` (both ends included when the step divides the span) or a comma list.

    >>> parse_grid("0.2:0.3:0.05")
    [0.2, 0.25, 0.3]
    """
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"grid must be start:end:step, got {text!r}")
            start, end, step = (Decimal(p) for p in parts)
            if step <= 0:
                raise UsageError("grid step must be positive")
            out = []
            v = start
            while v <= end:
                out.append(float(v))
                v += step
            return out
        return [float(Decimal(p)) for p in text.split(",") if p.strip()]
    except InvalidOperation:
        raise UsageError(f"cannot parse grid {text!r}") from None


def parse_ints(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _read_text(path: str) -> list[str]:
    if path == "-":
        return sys.stdin.read().splitlines()
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _read_values(path: str) -> list[float]:
    lines = _read_text(path)
    try:
        return read_observations(lines)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _read_z_abs(path: str) -> np.ndarray:
    lines = _read_text(path)
    try:
        _, closes, skipped = read_price_csv(lines)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if skipped:
        print(f"warning: skipped {skipped} row(s) with unparsable close", file=sys.stderr)
    return prices_to_returns(closes).z_abs


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _threads(args) -> int:
    if os.environ.get("GEOMREC_THREADS"):
        return default_threads()
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    return default_threads()


def cmd_estimate(args) -> str:
    values = _read_values(args.input)
    params = GeomRecordParams(args.delta, args.m, args.A)
    sample = extract(values, params)
    if args.variant == "complete":
        try:
            report = mle_complete(sample, args.alpha)
        except EmptySampleError:
            raise MLENonexistenceError("no closed block: the first record has no successor") from None
    else:
        report = mle_practical(sample, args.alpha)
    d = report.to_dict()
    if args.format == "csv":
        header = ["gamma_hat", "sigma_hat", "ci_low", "ci_high", "alpha", "n_blocks", "ess", "variant"]
        row = [d["gamma_hat"], d["sigma_hat"], report.ci_low, report.ci_high, d["alpha"], d["n_blocks"], d["ess"], d["variant"]]
        return _csv_text(header, [row])
    return _json_text(d)


def cmd_simulate_table(args) -> str:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    dist = parse_distribution(args.dist)
    gamma = args.gamma if args.gamma is not None else dist.gamma
    config = TrialConfig(
        dist,
        gamma,
        tuple(parse_grid(args.deltas)),
        args.m,
        args.A,
        args.n_records,
        tuple(parse_ints(args.ks)),
        tuple(parse_ints(args.ells)),
        args.cap,
    )
    summary = replicate(config, args.reps, args.seed, _threads(args))
    if args.format == "json":
        rows = [
            {
                "dist": dist.label(),
                "gamma": gamma,
                "estimator": c.estimator,
                "param": c.param,
                "mean": c.mean,
                "mse": c.mse,
                "median_ess": c.median_ess,
                "reps": c.reps,
                "failures": c.failures,
            }
            for c in summary.cells
        ]
        return _json_text(rows)
    return summary.to_csv()


def cmd_simulate_clt(args) -> str:
    if args.reps < 2:
        raise UsageError("--reps must be >= 2")
    res = clt_study(args.gamma, args.delta, args.m, args.n_blocks, args.reps, args.seed, args.alpha)
    if args.format == "csv":
        keys = list(res)
        return _csv_text(keys, [[res[k] for k in keys]])
    return _json_text(res)


def cmd_trace(args) -> str:
    dist = parse_distribution(args.dist)
    params = GeomRecordParams(args.delta, args.m, args.A)
    traces = trace_paths(dist, args.n, params, args.k, args.seed)
    if args.format == "json":
        return _json_text(
            {name: [[p.effective_index, p.estimate] for p in pts] for name, pts in traces.items()}
        )
    rows = [[p.estimator, p.effective_index, p.estimate] for pts in traces.values() for p in pts]
    return _csv_text(["estimator", "ess", "estimate"], rows)


def cmd_returns(args) -> str:
    lines = _read_text(args.input)
    try:
        dates, closes, skipped = read_price_csv(lines)
    except ValueError as exc:
        raise ParseError(f"{args.input}: {exc}") from None
    if skipped:
        print(f"warning: skipped {skipped} row(s) with unparsable close", file=sys.stderr)
    series = prices_to_returns(closes, dates)
    rows = [[t, float(y), float(z)] for t, y, z in zip(series.timestamps, series.y, series.z_abs)]
    if args.format == "json":
        return _json_text([{"date": t, "log_return": y, "z_abs": z} for t, y, z in rows])
    return _csv_text(["date", "log_return", "z_abs"], rows)


def _values_for(args) -> np.ndarray:
    if args.prices:
        return _read_z_abs(args.input)
    return np.asarray(_read_values(args.input), dtype=np.float64)


def cmd_esf(args) -> str:
    fit = esf_fit(_values_for(args), args.threshold)
    if args.points:
        text = _csv_text(["log_x", "log_esf"], [[float(a), float(b)] for a, b in fit.points])
        _write(args.points, text)
    if args.format == "csv":
        return _csv_text(["threshold", "slope", "intercept"], [[fit.threshold, fit.slope, fit.intercept]])
    return _json_text(fit.to_dict())


def cmd_delta_scan(args) -> str:
    grid = parse_grid(args.deltas)
    entries = delta_scan(_values_for(args), grid, args.m, args.A, args.alpha, _threads(args))
    if args.format == "json":
        return _json_text([e._asdict() for e in entries])
    return _csv_text(["delta", "gamma_hat", "ci_low", "ci_high", "n_blocks"], [list(e) for e in entries])


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--threads", type=int, default=None, help="worker threads (GEOMREC_THREADS overrides)")

    p = _Parser(prog="geomrec", description="Tail-index estimation from geometric records.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("estimate", parents=[common], help="estimate gamma from a file of observations")
    s.add_argument("--input", required=True, help="one observation per line, '-' for stdin")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--m", type=int, default=5)
    s.add_argument("--A", type=float, default=0.0)
    s.add_argument("--variant", choices=["complete", "practical"], default="practical")
    s.add_argument("--alpha", type=float, default=0.05)
    s.set_defaults(func=cmd_estimate, default_format="json")

    s = sub.add_parser("simulate-table", parents=[common], help="Monte Carlo comparison table")
    s.add_argument("--dist", required=True, help="e.g. pareto:2,1")
    s.add_argument("--gamma", type=float, default=None, help="true tail index (default: the parent's)")
    s.add_argument("--deltas", default="0.8,0.6,0.5,0.4,0.2")
    s.add_argument("--ks", default="5,10,15,20,30")
    s.add_argument("--ells", default="3,4,5,6,7")
    s.add_argument("--m", type=int, default=5)
    s.add_argument("--A", type=float, default=5.0)
    s.add_argument("--n-records", type=int, default=10)
    s.add_argument("--reps", type=int, default=10000)
    s.add_argument("--cap", type=int, default=10**8, help="max materialised draws per trial")
    s.set_defaults(func=cmd_simulate_table, default_format="csv")

    s = sub.add_parser("simulate-clt", parents=[common], help="asymptotic normality check")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--m", type=int, default=5)
    s.add_argument("--n-blocks", type=int, default=500)
    s.add_argument("--reps", type=int, default=2000)
    s.add_argument("--alpha", type=float, default=0.05)
    s.set_defaults(func=cmd_simulate_clt, default_format="json")

    s = sub.add_parser("trace", parents=[common], help="estimator paths along one stream")
    s.add_argument("--dist", required=True)
    s.add_argument("--n", type=int, required=True, help="raw observations")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--m", type=int, default=5)
    s.add_argument("--A", type=float, default=0.0)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_trace, default_format="csv")

    s = sub.add_parser("returns", parents=[common], help="log-returns and standardised absolute returns")
    s.add_argument("--input", required=True, help="CSV with date,close columns")
    s.set_defaults(func=cmd_returns, default_format="csv")

    for name, helptext in (("esf", "log-log empirical survival fit"), ("delta-scan", "estimates over a delta grid")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--input", required=True)
        s.add_argument("--prices", action="store_true", help="input is a date,close CSV; use |standardised returns|")
        if name == "esf":
            s.add_argument("--threshold", type=float, required=True)
            s.add_argument("--points", default=None, help="also write log_x,log_esf points here")
            s.set_defaults(func=cmd_esf, default_format="json")
        else:
            s.add_argument("--deltas", default="0.2:0.8:0.01")
            s.add_argument("--m", type=int, default=5)
            s.add_argument("--A", type=float, default=1.5)
            s.add_argument("--alpha", type=float, default=0.05)
            s.set_defaults(func=cmd_delta_scan, default_format="csv")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        text = args.func(args)
        _write(args.out, text)
    except (UsageError, ParameterError) as exc:
        print(f"geomrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MLENonexistenceError as exc:
        print(f"geomrec: estimator does not exist: {exc}", file=sys.stderr)
        return EXIT_NO_MLE
    except InsufficientDataError as exc:
        print(f"geomrec: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except EmptySampleError as exc:
        print(f"geomrec: no activation: {exc}", file=sys.stderr)
        return EXIT_NO_ACTIVATION
    except (ParseError, DomainError) as exc:
        print(f"geomrec: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"geomrec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AggregationError, DegenerateSampleError, GeomRecError, ValueError) as exc:
        print(f"geomrec: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
