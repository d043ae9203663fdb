import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.core.config import settings
from app.core.errors import ExitCode, InvariantViolation, LabError
from app.core.logging import configure_logging
from app.core.mixins import RecordHeader
from app.modules.harness.router import router
from app.modules.harness.schema import RunConfig
from app.modules.harness.service import artifact_path, failure_path, load_config, write_failures, write_outcome

logger = logging.getLogger("app")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hardcore-lab",
        description=f"{settings.APP_NAME}: exact, sampled and audited hard-core measures on the torus",
    )
    parser.add_argument("--log-level", default=None, help=f"logging level (default {settings.LOG_LEVEL})")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, command in router.commands.items():
        sub = subparsers.add_parser(name.value, help=command.help)
        sub.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        sub.add_argument("overrides", nargs="*", metavar="key=value", help="configuration overrides")
    return parser


def _record_violation(config: RunConfig, exc: InvariantViolation) -> None:
    """Failure artifact for a violation raised in the middle of a run"""
    header = RecordHeader.for_config(config.subcommand.value, config.echo(), seed=config.seed)
    path = failure_path(artifact_path(config))
    path.parent.mkdir(parents=True, exist_ok=True)
    write_failures(path, header, [{"detail": exc.detail, **exc.instance}])
    logger.error("Invariant violation: %s (instance written to %s)", exc.detail, path)


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    config = None
    try:
        config = load_config(args.subcommand, args.config, args.overrides)
        outcome = router.dispatch(config)
        write_outcome(config, outcome)
    except InvariantViolation as exc:
        if config is not None:
            _record_violation(config, exc)
        else:
            logger.error("Invariant violation: %s", exc.detail)
        return exc.exit_code
    except LabError as exc:
        logger.error("%s", exc.detail)
        return exc.exit_code
    return ExitCode.OK if outcome.ok else ExitCode.INVARIANT_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
