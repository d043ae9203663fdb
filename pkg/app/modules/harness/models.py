from dataclasses import dataclass, field
from typing import Any

from pydantic import BaseModel

from .enums import ArtifactFormat


@dataclass
class RunOutcome:
    """Records and failures produced by one subcommand

    extra_tables maps a file suffix to additional CSV rows written next to the
    main artifact.
    """
    format: ArtifactFormat
    records: list[BaseModel | dict[str, Any]] = field(default_factory=list)
    failures: list[dict[str, Any]] = field(default_factory=list)
    extra_tables: dict[str, list[BaseModel]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures
