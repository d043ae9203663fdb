from typing import Optional

from pydantic import BaseModel

from .models import DefectReport, MainBoundGroup


class DefectRow(BaseModel):
    """One CSV row of the defect audit"""
    J_mask: int
    defect_num: int
    defect_den: int
    defect_float: float
    argmax_I_mask: Optional[int] = None

    @classmethod
    def rows(cls, report: DefectReport) -> list["DefectRow"]:
        return [
            cls(
                J_mask=mask,
                defect_num=value.numerator,
                defect_den=value.denominator,
                defect_float=float(value),
                argmax_I_mask=report.argmax.get(mask),
            )
            for mask, value in sorted(report.defects.items())
        ]


class MainBoundRow(BaseModel):
    t: int
    F_mask: int
    S_mask: int
    J_mask: int
    j: int
    total: float
    target: float
    ratio: float

    @classmethod
    def from_group(cls, group: MainBoundGroup) -> "MainBoundRow":
        t, F_mask, S_mask, J_mask, j = group.key
        return cls(
            t=t,
            F_mask=F_mask,
            S_mask=S_mask,
            J_mask=J_mask,
            j=j,
            total=float(group.total),
            target=group.target,
            ratio=group.ratio,
        )


class FlowAuditSummary(BaseModel):
    activity: str
    rows: int
    small_rows: int
    large_rows: int
    row_sums_ok: bool
    max_defect: str
    max_defect_float: float
    telescoping_holds: bool
    identity_holds: bool
    prob_J0: str
    prob_J0_agrees: bool
    direction_failures: int
    failures: int

    @classmethod
    def from_report(cls, report: DefectReport) -> "FlowAuditSummary":
        return cls(
            activity=str(report.activity),
            rows=report.rows,
            small_rows=report.small_rows,
            large_rows=report.large_rows,
            row_sums_ok=report.row_sums_ok,
            max_defect=str(report.max_defect),
            max_defect_float=float(report.max_defect),
            telescoping_holds=report.telescoping_holds,
            identity_holds=report.identity_holds,
            prob_J0=str(report.prob_J0_direct),
            prob_J0_agrees=report.prob_J0_agrees,
            direction_failures=report.direction_failures,
            failures=len(report.failures),
        )
