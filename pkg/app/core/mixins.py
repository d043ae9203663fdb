import hashlib
import json
from datetime import datetime, timezone
from typing import Any, Optional

from pydantic import BaseModel, Field


def utc_now() -> datetime:
    """Returns current UTC time as timezone-aware datetime"""
    return datetime.now(timezone.utc)


def config_hash(config: dict[str, Any]) -> str:
    """sha256 of the canonical JSON rendering of a configuration"""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RecordHeader(BaseModel):
    """Header block written at the top of every artifact"""
    created_at: datetime = Field(default_factory=utc_now)
    subcommand: str
    config: dict[str, Any]
    config_hash: str
    seed: Optional[int] = None

    @classmethod
    def for_config(cls, subcommand: str, config: dict[str, Any], seed: Optional[int] = None) -> "RecordHeader":
        return cls(subcommand=subcommand, config=config, config_hash=config_hash(config), seed=seed)

    def comment_lines(self) -> list[str]:
        """CSV rendering: one '# key=value' line per header field"""
        return [
            f"# created_at={self.created_at.isoformat()}",
            f"# subcommand={self.subcommand}",
            f"# config_hash={self.config_hash}",
            f"# seed={self.seed}",
            f"# config={json.dumps(self.config, sort_keys=True, default=str)}",
        ]
