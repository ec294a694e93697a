"""Command-line entry point for the LTTD toolkit."""

import argparse
import logging
from pathlib import Path
import sys

from app.commands.evaluate import cmd_eval
from app.commands.param_count import cmd_param_count
from app.commands.topology_info import cmd_topology_info
from app.commands.train import cmd_train
from app.commands.verify import cmd_verify
from app.common.errors import ServiceError
from app.common.settings import log_level

EXIT_SERVICE_ERROR = 1
EXIT_UNEXPECTED = 2

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per operation."""
    parser = argparse.ArgumentParser(
        prog="lttd", description="Decomposed trilinear attention and federated training simulator",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="Run the oracle and property checks")
    verify.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    param_count = commands.add_parser("param-count", help="Full against decomposed parameter counts")
    param_count.add_argument("config", type=Path)
    param_count.add_argument("--sweep", action="store_true", help="List every admissible slicing parameter")

    train = commands.add_parser("train", help="Run a simulation")
    train.add_argument("config", type=Path)
    train.add_argument("--out", type=Path, required=True, help="Output directory")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--threads", type=int, default=None, help="Worker threads (LTTD_THREADS overrides)")
    train.add_argument("--dump-data", action="store_true", help="Also write the sharded samples as CSV")

    evaluate = commands.add_parser("eval", help="Held-out metrics of a parameter file")
    evaluate.add_argument("params", type=Path)
    evaluate.add_argument("--seed", type=int, default=None)

    topology_info = commands.add_parser("topology-info", help="Describe a topology file")
    topology_info.add_argument("topology")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    """Run the selected command."""
    if args.command == "verify":
        return cmd_verify(inject_fault=args.inject_fault)
    if args.command == "param-count":
        return cmd_param_count(args.config, sweep=args.sweep)
    if args.command == "train":
        return cmd_train(args.config, args.out, seed=args.seed, threads=args.threads, dump_data=args.dump_data)
    if args.command == "eval":
        return cmd_eval(args.params, seed=args.seed)
    return cmd_topology_info(args.topology)


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, configure logging on stderr and translate errors to exit codes.

    Returns:
        0 on success, 1 for domain errors, 2 for anything unexpected
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return dispatch(args)
    except ServiceError as service_error:
        logger.error("%s", service_error.message)
        return EXIT_SERVICE_ERROR
    except Exception:
        logger.exception("Unhandled exception while running %s", args.command)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
