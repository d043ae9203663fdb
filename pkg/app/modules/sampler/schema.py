from pydantic import BaseModel, ConfigDict, Field

from .models import EstimateReport, GapPoint


class SampleRow(BaseModel):
    """One CSV row of the sample subcommand"""
    model_config = ConfigDict(populate_by_name=True)

    d: int
    M: int
    lambda_: float = Field(alias="lambda")
    boundary: str
    v0: str
    estimate: float
    stderr: float
    sweeps: int
    burn_in: int
    seed: int

    @classmethod
    def from_report(cls, d: int, M: int, activity: float, boundary: str, v0: tuple[int, ...],
                    report: EstimateReport) -> "SampleRow":
        return cls(
            d=d,
            M=M,
            lambda_=activity,
            boundary=boundary,
            v0=" ".join(str(c) for c in v0),
            estimate=report.estimate,
            stderr=report.stderr,
            sweeps=report.sweeps,
            burn_in=report.burn_in,
            seed=report.seed,
        )


class GapRow(BaseModel):
    """One CSV row of the gap-scan subcommand"""
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(alias="lambda")
    estimate_even: float
    stderr_even: float
    estimate_odd: float
    stderr_odd: float
    gap: float
    gap_stderr: float
    burn_in_warning: bool

    @classmethod
    def from_point(cls, point: GapPoint) -> "GapRow":
        return cls(
            lambda_=point.activity,
            estimate_even=point.even.estimate,
            stderr_even=point.even.stderr,
            estimate_odd=point.odd.estimate,
            stderr_odd=point.odd.stderr,
            gap=point.gap,
            gap_stderr=point.gap_stderr,
            burn_in_warning=point.even.burn_in_warning or point.odd.burn_in_warning,
        )
