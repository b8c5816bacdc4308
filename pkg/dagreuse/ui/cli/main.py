from __future__ import annotations

import argparse
import logging
import sys

from dagreuse.core.errors import DagReuseError
from dagreuse.engine.executors.registry import available_executors
from dagreuse.optimizer.materialization import MatPolicy
from dagreuse.ui.cli import commands


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagreuse", description="Reuse-aware workflow DAG optimizer")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    subparsers = parser.add_subparsers(dest="command", required=True)

    store_parent = argparse.ArgumentParser(add_help=False)
    store_parent.add_argument("--store", default=None, help="Store directory (catalog, objects, history)")

    exec_parent = argparse.ArgumentParser(add_help=False)
    exec_parent.add_argument("--policy", choices=[p.value for p in MatPolicy], default=None)
    exec_parent.add_argument("--budget", type=int, default=None, help="Storage budget in bytes")
    exec_parent.add_argument("--executor", choices=available_executors(), default=None)

    sub = subparsers.add_parser("plan", parents=[store_parent], help="Show the optimal plan for a workflow")
    sub.add_argument("workflow")
    sub.add_argument("--emit-psp", default=None, metavar="PATH", help="Write the project-selection instance and flow network")
    sub.set_defaults(func=commands.cmd_plan)

    sub = subparsers.add_parser("run", parents=[store_parent, exec_parent], help="Execute one iteration against the store")
    sub.add_argument("workflow")
    sub.set_defaults(func=commands.cmd_run)

    sub = subparsers.add_parser("simulate", parents=[store_parent, exec_parent], help="Run a seeded multi-iteration session")
    sub.add_argument("workflow")
    sub.add_argument("--iters", type=int, default=10)
    sub.add_argument("--weights", default="1,1,1", help="Iteration type weights d,l,p")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", default=None, help="Directory for report.csv and report.json")
    sub.set_defaults(func=commands.cmd_simulate)

    exp = subparsers.add_parser("experiment", help="Run experiment workflows")
    exp_subparsers = exp.add_subparsers(dest="experiment_command", required=True)

    sub = exp_subparsers.add_parser("compare", parents=[store_parent], help="Compare opt, am and nm on one seeded session")
    sub.add_argument("workflow")
    sub.add_argument("--iters", type=int, default=10)
    sub.add_argument("--weights", default="1,1,1", help="Iteration type weights d,l,p")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--runs", type=int, default=1, help="Repeat every session N times and average per-iteration values")
    sub.add_argument("--budget", type=int, default=None, help="Storage budget in bytes")
    sub.add_argument("--executor", choices=available_executors(), default=None)
    sub.add_argument("--out", default=None, help="Directory for comparison.csv and comparison.json")
    sub.set_defaults(func=commands.cmd_experiment_compare)

    sub = subparsers.add_parser("diff", help="List original nodes between two workflow versions")
    sub.add_argument("prev")
    sub.add_argument("next")
    sub.set_defaults(func=commands.cmd_diff)

    sub = subparsers.add_parser("verify", help="Cross-check the optimizer against exhaustive search")
    sub.add_argument("workflow", nargs="?", default=None)
    sub.add_argument("--random", type=int, default=0, metavar="N", help="Also check N seeded random instances")
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=commands.cmd_verify)

    sub = subparsers.add_parser("report", parents=[store_parent], help="Print the iteration history of a store")
    sub.add_argument("--out", default=None, help="Also write report.csv and report.json here")
    sub.set_defaults(func=commands.cmd_report)

    sub = subparsers.add_parser("doctor", parents=[store_parent], help="Check environment and store consistency")
    sub.set_defaults(func=commands.cmd_doctor)

    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        code = args.func(args)
    except DagReuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return int(code or 0)


if __name__ == "__main__":
    raise SystemExit(main())
