import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.modules.ensemble.enums import Boundary
from app.modules.ensemble.service import parse_activity
from .enums import ExactQuantity, Subcommand


class RunConfig(BaseModel):
    """Validated run configuration for one subcommand"""
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    subcommand: Subcommand
    d: int = Field(default=2, ge=1)
    M: int = Field(default=2, ge=2)
    lambda_: list[str] = Field(default_factory=lambda: ["1"], alias="lambda", min_length=1)
    v0: Optional[tuple[int, ...]] = None
    boundary: Boundary = Boundary.EVEN
    quantity: ExactQuantity = ExactQuantity.OCCUPATION
    seed: int = Field(default=0, ge=0)
    sweeps: int = Field(default=100_000, ge=1)
    burn_in: int = Field(default=10_000, ge=0, alias="burn-in")
    samples: Optional[int] = Field(default=None, ge=1)
    thin: int = Field(default=10, ge=1)
    tau: Optional[int] = Field(default=None, ge=0)
    force_large: bool = Field(default=False, alias="force-large")
    small_only: bool = Field(default=False, alias="small-only")
    xi: Optional[float] = Field(default=None, gt=0)
    psi: Optional[float] = Field(default=None, gt=0)
    covers: bool = False
    r_max: int = Field(default=8, ge=0, alias="r-max")
    q: Optional[int] = Field(default=None, ge=1)
    enumeration_budget: Optional[int] = Field(default=None, ge=1, alias="enumeration-budget")
    workers: int = Field(default=1, ge=1)
    output: Optional[Path] = None
    artifact: Optional[Path] = None

    @field_validator("lambda_", mode="before")
    @classmethod
    def split_activities(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        if isinstance(value, (int, float)):
            return [str(value)]
        if isinstance(value, list):
            return [str(item) for item in value]
        return value

    @field_validator("v0", mode="before")
    @classmethod
    def parse_site(cls, value: Any) -> Any:
        if isinstance(value, str):
            parts = [p for p in re.split(r"[\s,()]+", value) if p]
            try:
                return tuple(int(p) for p in parts)
            except ValueError as exc:
                raise ValueError(f"cannot parse site {value!r}") from exc
        return value

    @model_validator(mode="after")
    def check_combination(self) -> "RunConfig":
        if self.subcommand in (Subcommand.SAMPLE, Subcommand.GAP_SCAN) and self.sweeps <= self.burn_in:
            raise ValueError("sweeps must exceed burn-in")
        if self.force_large and self.small_only:
            raise ValueError("force-large and small-only exclude each other")
        if self.v0 is not None and len(self.v0) != self.d:
            raise ValueError(f"v0 has {len(self.v0)} coordinates, expected d={self.d}")
        if self.subcommand is Subcommand.REPLAY and self.artifact is None:
            raise ValueError("replay needs artifact=<path>")
        return self

    def activities(self) -> list[Fraction]:
        """Exact activities ("p/q" or decimal strings)"""
        return [parse_activity(value) for value in self.lambda_]

    def float_activities(self) -> list[float]:
        return [float(a) for a in self.activities()]

    def echo(self) -> dict[str, Any]:
        """The configuration as recorded in artifact headers"""
        return self.model_dump(mode="json", by_alias=True, exclude={"output"})
