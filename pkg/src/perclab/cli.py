"""Command line front end.

One subcommand per experiment kind plus `plot`.  Exit codes: 0 on success,
1 for configuration problems (bad flags, bad config files), 2 for runtime
failures.
"""

import argparse
import sys

from .runner import (ConfigError, EXPERIMENT_KINDS, emit_plot, load_config,
                     run_experiment)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; those are config problems here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def build_parser():
    parser = _Parser(prog="perclab",
                     description="High-dimensional percolation laboratory.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for kind in EXPERIMENT_KINDS:
        sp = sub.add_parser(kind, help="run a '%s' experiment" % kind)
        sp.add_argument("--config", required=True,
                        help="key=value config file")
        sp.add_argument("--out", required=True, help="output CSV path")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config's master_seed")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes (results are identical for "
                             "any count)")
    pp = sub.add_parser("plot", help="render an experiment CSV to SVG")
    pp.add_argument("--csv", required=True, help="experiment CSV to plot")
    pp.add_argument("--out", required=True, help="output SVG path")
    pp.add_argument("--kind", default=None, choices=EXPERIMENT_KINDS,
                    help="experiment kind (default: read the sidecar)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    try:
        if args.command == "plot":
            out = emit_plot(args.csv, args.out, kind=args.kind)
            print("wrote %s" % out)
            return 0
        config = load_config(args.config, args.command, seed=args.seed)
        result = run_experiment(config, args.out, workers=args.workers)
        print("wrote %s (%d rows) and %s"
              % (result.csv_path, result.n_rows, result.sidecar))
        for key in ("two_point_polynomial", "cluster_mean_polynomial"):
            if key in result.extras:
                print("%s: %s" % (key, result.extras[key]))
        if "violations" in result.extras:
            print("inequality violations: %d" % result.extras["violations"])
        return 0
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except (KeyboardInterrupt, SystemExit):
        raise
    except Exception as exc:  # runtime failure, keep the exit-code contract
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
