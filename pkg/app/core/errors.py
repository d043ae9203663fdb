"""
Error types shared by every module.

Each error carries the process exit code the harness reports for it.
"""

from enum import IntEnum
from typing import Any, Optional


class ExitCode(IntEnum):
    OK = 0
    INVARIANT_FAILURE = 1
    USAGE = 2


class LabError(Exception):
    """Base error with an exit code and a human readable detail"""

    exit_code: ExitCode = ExitCode.USAGE

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class UsageError(LabError):
    """Malformed command line or configuration"""

    exit_code = ExitCode.USAGE


class ConfigError(UsageError):
    """Run configuration failed validation"""


class BudgetExceededError(LabError):
    """An exhaustive computation would exceed its configured budget"""

    exit_code = ExitCode.USAGE


class PreconditionError(LabError):
    """An operation was called outside its precondition"""

    exit_code = ExitCode.USAGE


class InvariantViolation(LabError):
    """A proved property failed on a concrete instance"""

    exit_code = ExitCode.INVARIANT_FAILURE

    def __init__(self, detail: str, instance: Optional[dict[str, Any]] = None):
        super().__init__(detail)
        self.instance = instance or {}


class NoAdmissibleDirection(LabError):
    """No direction satisfies both large-I direction rules on this instance"""

    exit_code = ExitCode.INVARIANT_FAILURE


def require(condition: bool, detail: str, **instance: Any) -> None:
    """Raise InvariantViolation with the offending instance unless condition holds"""
    if not condition:
        raise InvariantViolation(detail, instance)
