#!/usr/bin/env python3
"""Rate-splitting cell-free MU-MIMO simulator.

Usage:
  ./main.py sweep-snr   [--config PATH] [--seed N] [--trials N] [--out DIR] ...
  ./main.py sweep-iters [--random-init] ...
  ./main.py sweep-csit  ...
  ./main.py cost-table  [--nt 12] [--k 3] [--it 0,3,10] [--csv]
  ./main.py selftest

Exit status: 0 on success, 1 on a usage or configuration error, 2 when a
run fails.
"""
import argparse
import signal
import sys

from rscf import cost, selftest, timing
from rscf.errors import ConfigurationError
from rscf.experiments import SWEEPS
from rscf.precoders import SCHEMES
from rscf.settings import SimConfig, full_scale, load_config, with_overrides

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to exit status 1."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _int_list(text):
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser():
    parser = ArgumentParser(prog="main.py", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)

    for name, help_text in (("sweep-snr", "ergodic sum rate vs SNR"),
                            ("sweep-iters", "ergodic sum rate vs robust design iterations"),
                            ("sweep-csit", "ergodic sum rate vs CSIT quality")):
        sweep = commands.add_parser(name, help=help_text)
        sweep.add_argument("--config", help="settings file (config.py format)")
        sweep.add_argument("--seed", type=int, help="master seed")
        sweep.add_argument("--trials", type=int, help="channel drops per sweep point")
        sweep.add_argument("--n-err", type=int, dest="n_err",
                           help="error matrices per channel drop")
        sweep.add_argument("--out", default="results", help="output directory")
        sweep.add_argument("--no-clustering", action="store_true",
                           help="precode with the full estimate instead of the AP clusters")
        sweep.add_argument("--scheme", action="append", choices=SCHEMES,
                           help="restrict to a scheme (repeatable)")
        sweep.add_argument("--full-scale", action="store_true",
                           help="10000 trials x 100 error matrices")
        sweep.add_argument("--random-init", action="store_true",
                           help="also start the robust design from a random precoder")
        sweep.add_argument("--quiet", action="store_true", help="no progress output")

    table = commands.add_parser("cost-table", help="FLOP counts of the precoders")
    table.add_argument("--nt", type=_int_list, default=[12], help="AP counts, e.g. 8,12,16")
    table.add_argument("--k", type=_int_list, default=[3], help="user counts")
    table.add_argument("--it", type=_int_list, default=[0, 3, 10], help="iteration counts")
    table.add_argument("--csv", action="store_true", help="CSV instead of a text table")

    commands.add_parser("selftest", help="oracle and property checks")
    return parser


def resolve_config(args):
    """Config file (or defaults) with command-line overrides applied."""
    cfg = load_config(args.config) if args.config else SimConfig()
    if args.full_scale:
        cfg = full_scale(cfg)
    return with_overrides(
        cfg,
        master_seed=args.seed,
        trials=args.trials,
        n_err=args.n_err,
        clustering_enabled=False if args.no_clustering else None,
        schemes=tuple(args.scheme) if args.scheme else None,
        random_init=True if args.random_init else None,
    )


def run_cost_table(args):
    try:
        reports = [cost.cost_report(n_t, k, i_t)
                   for n_t in args.nt for k in args.k for i_t in args.it]
    except ValueError as e:
        print(f"cost-table: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.csv:
        print(cost.format_csv(reports), end="")
    else:
        print(cost.format_table(reports))
    return EXIT_OK


def run_sweep(args):
    try:
        cfg = resolve_config(args)
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    verbose = timing.VERBOSE
    timing.VERBOSE = verbose and not args.quiet
    try:
        SWEEPS[args.command](cfg, out_dir=args.out)
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print(f"[{args.command}] interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        print(f"[{args.command}] failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        timing.VERBOSE = verbose
    return EXIT_OK


def cli_main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "cost-table":
        return run_cost_table(args)
    if args.command == "selftest":
        return EXIT_OK if selftest.run() else EXIT_RUNTIME
    return run_sweep(args)


def signal_handler(signum, frame):
    """Turn SIGTERM into KeyboardInterrupt so a sweep stops like on Ctrl+C."""
    raise KeyboardInterrupt


def main():
    sys.stdout.reconfigure(line_buffering=True)
    sys.stderr.reconfigure(line_buffering=True)
    signal.signal(signal.SIGTERM, signal_handler)
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
