"""Command-line entry point: ``avgcase {bench,coeffs,rates} ...``."""
from __future__ import annotations

import argparse
import csv
import sys

from . import bench, rates
from .recurrence import disk_recurrence, disk_weights, mp_coefficients, write_coefficients_csv

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_common(p):
    p.add_argument("--config", help="JSON file with a flat object of config keys")
    p.add_argument("--iters", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--init-scale", type=float)
    p.add_argument("--centered", action="store_const", const=True,
                   help="translate each instance so its solution is the origin")
    p.add_argument("--methods", type=_names, help="comma-separated method names")
    p.add_argument("--eg-step", type=float, help="fixed extragradient step")
    p.add_argument("--eg-grid", action="store_const", const=True,
                   help="pick the extragradient step per instance from {0.1..1.0}/sqrt(L)")
    p.add_argument("--gd-step", type=float)
    p.add_argument("--out", help="output prefix for <prefix>.csv and <prefix>.svg")
    p.add_argument("--svg", action="store_const", const=True, help="also write <prefix>.svg")
    p.add_argument("--threads", type=int)
    p.add_argument("--strict", action="store_true", help="exit 3 if any run diverged")
    p.add_argument("--dump-config", action="store_true",
                   help="print the resolved config as JSON and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avgcase", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a random-ensemble benchmark")
    bsub = b.add_subparsers(dest="experiment", required=True)
    bb = bsub.add_parser("bilinear", help="Gaussian bilinear games")
    bb.add_argument("--d1", type=int)
    bb.add_argument("--d2", type=int)
    bb.add_argument("--sigma2", type=float)
    bb.add_argument("--ratios", type=_floats, help="comma-separated d1/d2 ratios (d2 fixed)")
    bb.add_argument("--sweep", action="store_true",
                    help="shorthand for --ratios " + ",".join(map(str, bench.DEFAULT_RATIOS)))
    bb.add_argument("--edges", choices=["empirical", "theory"])
    _add_common(bb)
    bd = bsub.add_parser("disk", help="operators with spectrum in a disk")
    bd.add_argument("--d", type=int)
    bd.add_argument("--center", "-C", type=float)
    bd.add_argument("--radius", "-R", type=float)
    bd.add_argument("--mode", choices=["normal", "iid"])
    _add_common(bd)

    c = sub.add_parser("coeffs", help="tabulate method coefficients as CSV")
    csub = c.add_subparsers(dest="family", required=True)
    cm = csub.add_parser("mp", help="Marchenko-Pastur momentum schedule")
    cm.add_argument("--sigma2", type=float, default=1.0)
    cm.add_argument("--r", type=float, required=True)
    cm.add_argument("--horizon", type=int, default=100)
    cm.add_argument("--out", help="CSV path (default: stdout)")
    cd = csub.add_parser("disk", help="disk recurrence and averaging weights")
    cd.add_argument("--center", "-C", type=float, default=2.0)
    cd.add_argument("--radius", "-R", type=float, default=1.0)
    cd.add_argument("--horizon", type=int, default=100)
    cd.add_argument("--out", help="CSV path (default: stdout)")

    r = sub.add_parser("rates", help="closed-form expected errors")
    rsub = r.add_subparsers(dest="family", required=True)
    rd = rsub.add_parser("disk", help="uniform-disk rates")
    rd.add_argument("--center", "-C", type=float, default=2.0)
    rd.add_argument("--radius", "-R", type=float, default=1.0)
    rd.add_argument("--iters", type=int, default=100)
    rd.add_argument("--out", help="CSV path (default: stdout)")
    return parser


_CLI_ONLY = {"command", "experiment", "config", "strict", "dump_config", "sweep"}


def _run_bench(args) -> int:
    overrides = {k: v for k, v in vars(args).items() if k not in _CLI_ONLY}
    overrides["experiment"] = args.experiment
    if getattr(args, "sweep", False) and args.ratios is None:
        overrides["ratios"] = list(bench.DEFAULT_RATIOS)
    config = bench.parse_config(args.config, **overrides)
    if args.dump_config:
        print(bench.dump_config(config))
        return EXIT_OK
    rows = bench.run_benchmark(config)
    aggs = bench.aggregate(rows)
    bench.emit_csv(rows, f"{config.out}.csv")
    if config.svg:
        bench.emit_svg(aggs, f"{config.out}.svg")
    final = {}
    for a in aggs:
        key = (a.experiment, a.method)
        if a.mean is not None and a.t >= final.get(key, (-1,))[0]:
            final[key] = (a.t, a.mean, a.stderr)
    n_div = {(a.experiment, a.method): a.diverged for a in aggs}
    print(f"{'experiment':<20} {'method':<18} {'t':>5} {'mean dist':>12} {'stderr':>10} diverged")
    for key in sorted(n_div):
        t, mean, se = final.get(key, (0, float("nan"), float("nan")))
        print(f"{key[0]:<20} {key[1]:<18} {t:>5} {mean:>12.4e} {se:>10.2e} {n_div[key]}")
    if args.strict and any(r.diverged for r in rows):
        print("error: at least one run diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _run_coeffs(args) -> int:
    if args.horizon < 1:
        raise bench.ConfigError("horizon: must be >= 1")
    if args.family == "mp":
        table, rec = mp_coefficients(args.sigma2, args.r, args.horizon), None
    else:
        rec = disk_recurrence(args.center, args.horizon)
        table = disk_weights(args.center, args.radius, args.horizon)
    fh = _open_out(args.out)
    try:
        write_coefficients_csv(table, fh, rec=rec)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def _run_rates(args) -> int:
    if args.iters < 0:
        raise bench.ConfigError("iters: must be >= 0")
    preds = rates.predict(args.center, args.radius, args.iters)
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(bench.CSV_HEADER)
        for name in ("xi_opt", "xi_asymp", "xi_gd"):
            for p in preds:
                w.writerow(["disk", f"theory:{name}", "", p.t,
                            format(getattr(p, name), ".17g"), "", ""])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bench":
            return _run_bench(args)
        if args.command == "coeffs":
            return _run_coeffs(args)
        return _run_rates(args)
    except bench.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # Domain validation in the coefficient and rate tables is a config problem too.
        if args.command == "bench":
            raise
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
