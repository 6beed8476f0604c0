"""Command-line interface: ``cgfnorm test | calibrate | power | verify``.

Exit codes: 0 success, 1 failed verification checks, 2 input error
(bad flags, unreadable or malformed files, spec grammar), 3 numeric error.
Results are written to stdout as JSON with 17 significant digits.
"""

import argparse
import csv
import io as _stdio
import logging
import sys

from . import __version__
from .asymptotics import run_verification
from .calibration import (
    MULTIVARIATE, calibrate_null, critical_value, run_test, run_test_univariate,
)
from .distributions import parse_spec
from .ecgf import DEFAULT_POINTS, DEFAULT_RADIUS, POINT_LAWS, sample_points
from .errors import CorruptCalibration, InvalidInput
from .io import calibration_summary, dumps, parse_sample_csv, read_calibration, write_calibration
from .power import TESTS, PowerStudyConfig, power_study

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3

DEFAULT_S = 100_000

log = logging.getLogger("cgfnorm")


def _add_point_flags(ap, s_default=DEFAULT_S):
    ap.add_argument("--R", type=float, default=DEFAULT_RADIUS, help="radius of the evaluation region")
    ap.add_argument("--N", type=int, default=DEFAULT_POINTS, help="number of evaluation points")
    ap.add_argument("--S", type=int, default=s_default, help="null replications")
    ap.add_argument("--seed", type=int, default=0, help="seed for points and null draws")
    ap.add_argument("--points-law", choices=POINT_LAWS, default="ball",
                    help="sampling law of the evaluation points (default: ball)")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: CGFNORM_THREADS or 1)")


def build_parser():
    ap = argparse.ArgumentParser(prog="cgfnorm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test one sample for normality")
    t.add_argument("--input", required=True, help="CSV file, one observation per row")
    t.add_argument("--header", action="store_true", help="skip the first CSV row")
    t.add_argument("--calibration", help="calibration file; otherwise calibrate inline")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--univariate", action="store_true", help="use the univariate statistic (p = 1)")
    _add_point_flags(t)

    c = sub.add_parser("calibrate", help="simulate and store a null calibration")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--p", type=int, required=True)
    c.add_argument("--out", required=True)
    _add_point_flags(c)

    p = sub.add_parser("power", help="estimate rejection rates under an alternative")
    p.add_argument("--spec", required=True, help='e.g. "product:uniform(0,1):p=3"')
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tests", default=None,
                   help=f"comma-separated subset of {','.join(TESTS)} (default: T, or U when p = 1)")
    p.add_argument("--master-seed", type=int, default=1, help="seed for the alternative samples")
    p.add_argument("--calibration", help="reuse a stored calibration")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identity)")
    _add_point_flags(p, s_default=10_000)

    v = sub.add_parser("verify", help="check the asymptotic identities numerically")
    v.add_argument("--quick", action="store_true", help="reduced sizes, well under a minute")
    v.add_argument("--seed", type=int, default=0)
    return ap


def _calibration(args, n, p):
    if args.calibration:
        cal = read_calibration(args.calibration)
        if (cal.n, cal.p) != (n, p):
            raise InvalidInput(
                f"calibration is for (n={cal.n}, p={cal.p}) but the sample is (n={n}, p={p})"
            )
        return cal
    pts = sample_points(p, args.N, args.R, args.seed, args.points_law)
    return calibrate_null(n, p, pts, args.S, args.seed, threads=args.threads)


def cmd_test(args, out):
    x = parse_sample_csv(args.input, header=args.header)
    n, p = x.shape
    if args.univariate and p != 1:
        raise InvalidInput(f"--univariate needs a single column, got {p}")
    if not args.univariate and p < 2:
        raise InvalidInput("a single column needs --univariate")
    cal = _calibration(args, n, p)
    res = (run_test_univariate if args.univariate else run_test)(x, cal, args.alpha)
    body = {
        "statistic": res.statistic,
        "p_value": res.p_value,
        "reject": bool(res.reject),
        "alpha": res.alpha,
        "n": n,
        "p": p,
        "R": cal.point_set.radius,
        "N": cal.point_set.n_points,
        "S": cal.s_reps,
        "seed": cal.seed,
        "components": res.components,
        "degenerate_covariance": bool(res.degenerate_covariance),
    }
    out.write(dumps(body) + "\n")
    return EXIT_OK


def cmd_calibrate(args, out):
    pts = sample_points(args.p, args.N, args.R, args.seed, args.points_law)
    cal = calibrate_null(args.n, args.p, pts, args.S, args.seed, threads=args.threads)
    write_calibration(cal, args.out)
    summary = calibration_summary(cal)
    summary["critical_value_05"] = critical_value(cal, 0.05)
    summary["path"] = str(args.out)
    out.write(dumps(summary) + "\n")
    return EXIT_OK


def cmd_power(args, out):
    spec = parse_spec(args.spec)
    if args.tests:
        tests = tuple(s.strip() for s in args.tests.split(",") if s.strip())
    else:
        tests = ("U",) if spec.p == 1 else ("T",)
    cal = None
    if args.calibration:
        cal = read_calibration(args.calibration)
        if cal.kind == MULTIVARIATE and spec.p == 1:
            raise InvalidInput("multivariate calibration given for a univariate spec")
    cfg = PowerStudyConfig(
        spec=spec, n=args.n, replications=args.reps, alpha=args.alpha, radius=args.R,
        n_points=args.N, point_law=args.points_law, s_reps=args.S,
        calibration_seed=args.seed, tests=tests, master_seed=args.master_seed,
        threads=args.threads,
    )
    res = power_study(cfg, cal)
    rows = res.rows()
    if not args.timing:
        for r in rows:
            del r["wall_time"]
    if args.format == "csv":
        buf = _stdio.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in r.items()})
        out.write(buf.getvalue())
    else:
        out.write(dumps({"rows": rows, "critical_values": res.critical_values}) + "\n")
    return EXIT_OK


def cmd_verify(args, out):
    records = run_verification(quick=args.quick, seed=args.seed)
    passed = all(r.passed for r in records)
    report = {
        "quick": bool(args.quick),
        "seed": args.seed,
        "passed": passed,
        "checks": [{"name": r.name, "passed": bool(r.passed), "details": r.details} for r in records],
    }
    out.write(dumps(report) + "\n")
    return EXIT_OK if passed else EXIT_FAILED


COMMANDS = {"test": cmd_test, "calibrate": cmd_calibrate, "power": cmd_power, "verify": cmd_verify}


def main(argv=None, out=None):
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; keep --help/--version at 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (InvalidInput, CorruptCalibration, OSError) as exc:
        print(f"cgfnorm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArithmeticError as exc:
        print(f"cgfnorm: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
