from pydantic import BaseModel

from .models import ContourTrace


class ContourAuditRecord(BaseModel):
    """One JSON line of the contour audit"""
    I_mask: int
    g: int
    a: int
    t: int
    properties: dict[str, bool]

    @classmethod
    def from_trace(cls, trace: ContourTrace, properties: dict[str, bool]) -> "ContourAuditRecord":
        return cls(I_mask=trace.I.mask, g=trace.g, a=trace.a, t=trace.t, properties=properties)


class ContourAuditTotals(BaseModel):
    audited: int
    failed: int
    distinct_pairs: int
    max_multiplicity: int
    multiplicity_histogram: dict[int, int]
