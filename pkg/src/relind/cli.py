"""Command line interface.

Subcommands: ``test`` (one test on a CSV sample), ``simulate`` (one Monte
Carlo cell), ``power`` (a cell per tau on a grid) and ``table`` (a grid of
cells from a spec file).

Exit codes: 0 result computed, 2 usage error, 3 data or parse error,
4 resource cap exceeded, 5 numeric error.
"""

import argparse
import json
import sys

from relind import __version__, harness, testing, ustat
from relind.datagen import BOUNDARY_RHO, rho_from_tau
from relind.errors import RelindError, UsageError

KERNELS = ["covariance", "kendall", "spearman", "hoeffding-d", "bkr-r", "tau-star"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def _add_test_options(p, boot_default=100):
    p.add_argument("--kernel", default="kendall", choices=KERNELS)
    p.add_argument("--delta", type=float, default=0.1, help="threshold (default 0.1)")
    p.add_argument("--alpha", type=float, default=0.1, help="nominal level (default 0.1)")
    p.add_argument("--variant", default="normalized", choices=["normalized", "nv", "abs"])
    p.add_argument("--method", default="bootstrap", choices=["asymptotic", "bootstrap"])
    p.add_argument("--direction", default="relevant",
                   choices=["relevant", "interchanged", "classical"])
    p.add_argument("--boot", type=int, default=boot_default, help="bootstrap replications")
    p.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")
    p.add_argument("--signed-truncation", action="store_true",
                   help="truncate V-statistics to sign(V)*delta")
    p.add_argument("--fixed-sigma", action="store_true",
                   help="reuse the original jackknife deviations in bootstrap draws")
    p.add_argument("--cap", type=int, default=ustat.DEFAULT_CAP,
                   help="enumeration cap per pair for high-order kernels")


def _add_sim_options(p):
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--model", default="m1", choices=["m1", "m2", "m3"])
    p.add_argument("--pair", default="1,2", help="correlated pair for m3 (default 1,2)")
    p.add_argument("--dist", default="normal", help="normal or t<dof>, e.g. t3")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--threads", default="1", help="worker threads or 'auto'")
    p.add_argument("--boot-threads", type=int, default=1,
                   help="threads for bootstrap draws within one replication")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--timing", action="store_true", help="fill the wall_time_s column")


def build_parser():
    parser = _Parser(prog="relind", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"relind {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="test a CSV sample")
    p.add_argument("--input", required=True, help="CSV file, one observation per row")
    p.add_argument("--header", action="store_true", help="skip the first row")
    p.add_argument("--threads", type=int, default=1, help="threads for bootstrap draws")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--max-pairs", type=int, default=20,
                   help="exceeding pairs listed in text output")
    _add_test_options(p)

    p = sub.add_parser("simulate", help="run one simulation cell")
    _add_sim_options(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rho", type=float)
    g.add_argument("--tau", type=float)
    _add_test_options(p)

    p = sub.add_parser("power", help="rejection rates over a tau grid")
    _add_sim_options(p)
    p.add_argument("--tau-grid", required=True, help="a:b:step (inclusive) or a,b,c")
    _add_test_options(p)

    p = sub.add_parser("table", help="run a grid of cells from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", help="override the thread count in the table file")
    p.add_argument("--timing", action="store_true", help="fill the wall_time_s column")
    return parser


def _test_config(args):
    return testing.TestConfig(
        delta=args.delta,
        alpha=args.alpha,
        variant=args.variant,
        direction=args.direction,
        method=args.method,
        boot_reps=args.boot,
        seed=args.seed,
        signed_truncation=args.signed_truncation,
        studentize=not args.fixed_sigma,
    )


def _threads(value):
    if value is None or value == "auto":
        return value
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"threads must be an integer or 'auto', got {value!r}") from None


def _sim_config(args, rho):
    try:
        pair = tuple(int(t) for t in args.pair.split(","))
    except ValueError:
        raise UsageError(f"--pair must look like i,j, got {args.pair!r}") from None
    tcfg = _test_config(args)
    return harness.SimConfig(
        n=args.n, p=args.p, model=args.model, rho=rho, pair=pair, dist=args.dist,
        kernel=args.kernel, delta=tcfg.delta, alpha=tcfg.alpha,
        variant=tcfg.variant.value, direction=tcfg.direction.value,
        method=tcfg.method.value, reps=args.reps, boot_reps=tcfg.boot_reps,
        seed=tcfg.seed, threads=_threads(args.threads), boot_threads=args.boot_threads,
        signed_truncation=tcfg.signed_truncation, studentize=tcfg.studentize,
        cap=args.cap,
    )


def _emit(text, out):
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_test(args):
    cfg = _test_config(args)
    x = harness.load_csv(args.input, args.header)
    rep = testing.run_full_test(x, args.kernel, cfg, threads=args.threads, cap=args.cap)
    if args.json:
        out = {
            "statistic": rep.statistic,
            "critical_value": rep.critical_value,
            "reject": rep.reject,
            "alpha": rep.alpha,
            "delta": rep.delta,
            "method": rep.method,
            "variant": rep.variant,
            "direction": rep.direction,
            "p_value": rep.p_value,
            "n": int(x.shape[0]),
            "p": int(x.shape[1]),
            "exceedances": [list(e) for e in rep.exceedances],
        }
        print(json.dumps(out, indent=2))
        return 0
    print(f"n = {x.shape[0]}, p = {x.shape[1]}, kernel = {args.kernel}")
    print(f"method = {rep.method}, variant = {rep.variant}, direction = {rep.direction}")
    print(f"delta = {rep.delta:g}, alpha = {rep.alpha:g}")
    print(f"statistic = {rep.statistic:.10g}")
    print(f"critical_value = {rep.critical_value:.10g}")
    if rep.p_value is not None:
        print(f"bootstrap_p_value = {rep.p_value:.4f} (informational)")
    print(f"decision = {'reject' if rep.reject else 'do not reject'}")
    ex = sorted(rep.exceedances, key=lambda e: -abs(e[2]))
    print(f"pairs with |U| > delta: {len(ex)}")
    for i, j, u in ex[: args.max_pairs]:
        print(f"  ({i},{j}) U = {u:.6f}")
    return 0


def _cmd_simulate(args):
    rho = BOUNDARY_RHO
    if args.rho is not None:
        rho = args.rho
    elif args.tau is not None:
        rho = rho_from_tau(args.tau)
    res = harness.run_cell(_sim_config(args, rho))
    _emit(harness.format_rows([res], args.timing), args.out)
    return 0


def _cmd_power(args):
    grid = harness.parse_tau_grid(args.tau_grid)
    cfg = _sim_config(args, BOUNDARY_RHO)
    results = harness.run_power_curve(cfg, grid)
    _emit(harness.format_rows(results, args.timing), args.out)
    return 0


def _cmd_table(args):
    harness.run_table(args.spec, args.out, threads=_threads(args.threads),
                      timing=True if args.timing else None)
    return 0


_COMMANDS = {
    "test": _cmd_test,
    "simulate": _cmd_simulate,
    "power": _cmd_power,
    "table": _cmd_table,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except RelindError as exc:
        print(f"relind: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"relind: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
