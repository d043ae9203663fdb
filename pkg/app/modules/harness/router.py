import logging
from dataclasses import dataclass
from typing import Callable

from app.core.errors import UsageError
from .enums import ArtifactFormat, Subcommand
from .models import RunOutcome
from .schema import RunConfig
from .service import (
    applied_budgets,
    approx_outcome,
    contour_outcome,
    exact_outcome,
    flow_outcome,
    gap_scan_outcome,
    iso_outcome,
    read_failure_artifact,
    same_failures,
    sample_outcome,
)

logger = logging.getLogger(__name__)

Handler = Callable[[RunConfig], RunOutcome]


@dataclass(frozen=True)
class Command:
    name: Subcommand
    help: str
    handler: Handler


class CommandRouter:
    """Registry of subcommand handlers"""

    def __init__(self):
        self.commands: dict[Subcommand, Command] = {}

    def command(self, name: Subcommand, help: str) -> Callable[[Handler], Handler]:
        def register(handler: Handler) -> Handler:
            self.commands[name] = Command(name=name, help=help, handler=handler)
            return handler

        return register

    def dispatch(self, config: RunConfig) -> RunOutcome:
        command = self.commands.get(config.subcommand)
        if command is None:
            raise UsageError(f"Unknown subcommand {config.subcommand}")
        logger.info("Running %s", command.name.value)
        with applied_budgets(config):
            return command.handler(config)


router = CommandRouter()


# ========================================
# Exact and sampled measures
# ========================================

@router.command(Subcommand.EXACT, help="Exact quantities by enumeration of J")
def exact(config: RunConfig) -> RunOutcome:
    return exact_outcome(config)


@router.command(Subcommand.SAMPLE, help="Glauber estimates of the occupation probability")
def sample(config: RunConfig) -> RunOutcome:
    return sample_outcome(config)


@router.command(Subcommand.GAP_SCAN, help="Even minus odd occupation over a range of activities")
def gap_scan(config: RunConfig) -> RunOutcome:
    return gap_scan_outcome(config)


# ========================================
# Audits
# ========================================

@router.command(Subcommand.CONTOUR_AUDIT, help="Contour properties over J0")
def contour_audit(config: RunConfig) -> RunOutcome:
    return contour_outcome(config)


@router.command(Subcommand.FLOW_AUDIT, help="Flow rows, defects and the bounds they imply")
def flow_audit(config: RunConfig) -> RunOutcome:
    return flow_outcome(config)


@router.command(Subcommand.APPROX_AUDIT, help="Boundary approximation over the pairs of J0")
def approx_audit(config: RunConfig) -> RunOutcome:
    return approx_outcome(config)


@router.command(Subcommand.ISO, help="Sphere and ball tables of Z^d with their checks")
def iso(config: RunConfig) -> RunOutcome:
    return iso_outcome(config)


@router.command(Subcommand.REPLAY, help="Rerun the configuration of a failure artifact")
def replay(config: RunConfig) -> RunOutcome:
    """Failures persist iff the rerun reports them again"""
    recorded_config, recorded = read_failure_artifact(config.artifact)
    if recorded_config.subcommand is Subcommand.REPLAY:
        raise UsageError("A replay artifact cannot be replayed")
    rerun = router.dispatch(recorded_config)
    reproduced = same_failures(recorded, rerun.failures)
    if reproduced:
        logger.info("Replay reproduced %d failures", len(recorded))
    else:
        logger.warning("Replay reported %d failures, artifact recorded %d", len(rerun.failures), len(recorded))
    return RunOutcome(
        format=ArtifactFormat.JSON,
        records=[{
            "replayed": recorded_config.subcommand.value,
            "recorded_failures": len(recorded),
            "replayed_failures": len(rerun.failures),
            "reproduced": reproduced,
        }],
        failures=rerun.failures,
    )
