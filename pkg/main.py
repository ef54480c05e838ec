import argparse
import logging
import sys

from dotenv import load_dotenv

load_dotenv()

from commands import defend, evaluate, extract, generate, ingest, reconstruct, report, sweep, train  # noqa: E402
from db.init import init_db  # noqa: E402
from utils.config import LOG_LEVEL  # noqa: E402
from utils.errors import RoboTraceError, StageError  # noqa: E402

logger = logging.getLogger(__name__)

COMMANDS = (generate, ingest, extract, train, evaluate, sweep, reconstruct, defend, report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robotrace",
        description="Traffic fingerprinting of TLS-encrypted teleoperated-robot control channels",
    )
    parser.add_argument("--seed", type=int, help="master seed (default: config seed, then ROBOTRACE_SEED)")
    parser.add_argument("--workers", type=int, help="parallel worker processes (default: ROBOTRACE_WORKERS)")
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    noise.add_argument("-q", "--quiet", action="count", default=0, help="less logging")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def log_level(verbosity: int) -> int:
    base = logging.getLevelName(LOG_LEVEL)
    if not isinstance(base, int):
        base = logging.INFO
    return min(logging.CRITICAL, max(logging.DEBUG, base - 10 * verbosity))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.verbosity = args.verbose - args.quiet

    # Configure logging
    logging.basicConfig(
        level=log_level(args.verbosity),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )

    init_db()
    try:
        return args.handler(args)
    except StageError as e:
        logger.error(str(e))
        return 2
    except RoboTraceError as e:
        logger.error(f"[{args.command}] {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
