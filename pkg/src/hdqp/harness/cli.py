"""Command-line entry point.

::

    hdqp run --config experiment.ini
    hdqp figure returns_small --out figs/ [--replicates 4]
    hdqp accept --tier fast [--report report.csv]

``--seed`` and ``--threads`` are accepted by every subcommand.
"""

import argparse
import sys

from ..errors import HDQPError
from .acceptance import acceptance_suite, format_report
from .config import DEFAULT_SEED, FIGURES, load_config
from .figures import reproduce_figure
from .runner import run_experiment


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=None, help="base seed (default: config or preset)")
    common.add_argument("--threads", type=int, default=None, help="worker threads")

    parser = argparse.ArgumentParser(prog="hdqp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run an experiment from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="override output_dir")

    fig = sub.add_parser("figure", parents=[common], help="reproduce a figure preset")
    fig.add_argument("fig_id", help=f"one of {', '.join(FIGURES)}")
    fig.add_argument("--out", required=True)
    fig.add_argument("--replicates", type=int, default=None, help="override the preset replicate count")

    acc = sub.add_parser("accept", parents=[common], help="run the acceptance suite")
    acc.add_argument("--tier", choices=("fast", "full"), default="fast")
    acc.add_argument("--only", type=int, nargs="*", default=None, help="criterion numbers")
    acc.add_argument("--report", default=None, help="write the CSV report here")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            changes = {}
            if args.seed is not None:
                changes["base_seed"] = args.seed
            if args.threads is not None:
                changes["parallelism"] = args.threads
            if args.out is not None:
                changes["output_dir"] = args.out
            rec, summ = run_experiment(cfg.with_(**changes))
            print(f"wrote {rec} and {summ}")
        elif args.command == "figure":
            csv_path, svg_path = reproduce_figure(
                args.fig_id, args.out, replicates=args.replicates,
                base_seed=DEFAULT_SEED if args.seed is None else args.seed,
                parallelism=args.threads or 1,
            )
            print(f"wrote {csv_path} and {svg_path}")
        else:
            results = acceptance_suite(
                args.tier, base_seed=DEFAULT_SEED if args.seed is None else args.seed,
                parallelism=args.threads or 1, only=args.only,
            )
            for r in results:
                print(r.line())
            if args.report:
                with open(args.report, "w") as fh:
                    fh.write(format_report(results))
            return 0 if all(r.passed for r in results) else 1
    except (HDQPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
