from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from app.modules.approx.models import ApproxPair, ApproxParams
from app.modules.contour.models import ContourTrace, GAPair
from app.modules.lattice.models import Direction, Occupancy, Torus, VertexSet
from .enums import FlowKind


@dataclass(frozen=True)
class ShiftData:
    """Shift of the inside of a contour in direction j"""
    j: Direction
    G0j: VertexSet  # G0 ∩ σ_j(O \ A)
    outside: VertexSet  # I \ W
    moved: VertexSet  # σ_j(I ∩ W)

    @property
    def base(self) -> Occupancy:
        """σ_j*(I), the smallest member of φ_j(I)"""
        return self.outside | self.moved

    @property
    def phi_size(self) -> int:
        return 1 << len(self.G0j)

    def __contains__(self, J: VertexSet) -> bool:
        return self.base <= J and J <= self.base | self.G0j


@dataclass(frozen=True)
class FlowConstants:
    """α = λ/(1+λ)² and β = (1+2λ)/(1+λ)²"""
    activity: Fraction
    alpha: Fraction
    beta: Fraction

    @classmethod
    def of(cls, activity: Fraction) -> "FlowConstants":
        activity = Fraction(activity)
        square = (1 + activity) ** 2
        return cls(activity=activity, alpha=activity / square, beta=(1 + 2 * activity) / square)


@dataclass(frozen=True)
class LargeFlowSplit:
    j: Direction
    C: VertexSet
    D: VertexSet


@dataclass(frozen=True)
class FlowPolicy:
    """Smallness threshold τ (|G| ≤ τ takes the small-I flow) and approximation parameters"""
    tau: Optional[int] = None  # default d³
    approx: ApproxParams = field(default_factory=ApproxParams)

    @classmethod
    def small_only(cls, torus: Torus, approx: Optional[ApproxParams] = None) -> "FlowPolicy":
        return cls(tau=torus.vertex_count, approx=approx or ApproxParams())

    @classmethod
    def forced_large(cls, approx: Optional[ApproxParams] = None) -> "FlowPolicy":
        return cls(tau=0, approx=approx or ApproxParams())

    def threshold(self, torus: Torus) -> int:
        return torus.d ** 3 if self.tau is None else self.tau


@dataclass(frozen=True)
class FlowRow:
    """The kernel row ν(I, ·) with everything needed to audit it"""
    I: Occupancy
    kind: FlowKind
    j: Direction
    trace: ContourTrace = field(repr=False)
    pair: GAPair = field(repr=False)
    shift: ShiftData
    entries: dict[int, Fraction] = field(repr=False)
    approx: Optional[ApproxPair] = field(default=None, repr=False)
    split: Optional[LargeFlowSplit] = None
    direction_failed: bool = False
    partition_ok: bool = True

    @property
    def row_sum(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))


@dataclass(frozen=True)
class DefectReport:
    activity: Fraction
    rows: int
    row_sums_ok: bool
    failures: list[dict]
    defects: dict[int, Fraction] = field(repr=False)
    argmax: dict[int, int] = field(repr=False)
    max_defect: Fraction
    weight_J0: Fraction
    weight_J: Fraction
    identity_holds: bool  # Σ_{J0} w(I) = Σ_J w(J)·defect(J)
    telescoping_holds: bool  # Σ_{J0} w(I) ≤ max defect · Σ_J w(J)
    prob_J0_direct: Fraction
    prob_J0_ratio: Fraction
    direction_failures: int
    small_rows: int
    large_rows: int

    @property
    def prob_J0_agrees(self) -> bool:
        return self.prob_J0_direct == self.prob_J0_ratio

    @property
    def ok(self) -> bool:
        return (
            self.row_sums_ok
            and not self.failures
            and self.identity_holds
            and self.telescoping_holds
            and self.prob_J0_agrees
            and self.prob_J0_direct <= self.max_defect
        )


@dataclass(frozen=True)
class MainBoundGroup:
    key: tuple
    t: int
    total: Fraction
    target: float

    @property
    def ratio(self) -> float:
        return float(self.total) / self.target if self.target else float("inf")
