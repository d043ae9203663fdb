from pydantic import BaseModel

from .models import BallCounts, Goal1Point


class SphereStratumRow(BaseModel):
    """CSV row: d, q, t, s_qt"""
    d: int
    q: int
    t: int
    s_qt: int

    @classmethod
    def rows(cls, counts: BallCounts) -> list["SphereStratumRow"]:
        return [
            cls(d=counts.d, q=q, t=t, s_qt=s_qt)
            for q, strata in enumerate(counts.s_strata)
            for t, s_qt in enumerate(strata)
        ]


class BallRow(BaseModel):
    """CSV row: d, r, b_r, s_r, bl_ratio"""
    d: int
    r: int
    b_r: int
    s_r: int
    bl_ratio: float

    @classmethod
    def from_point(cls, d: int, point: Goal1Point) -> "BallRow":
        return cls(d=d, r=point.r, b_r=point.b, s_r=point.s, bl_ratio=point.bl_ratio)
