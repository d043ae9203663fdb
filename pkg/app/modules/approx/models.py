from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from app.modules.lattice.models import Torus, VertexSet
from app.modules.lattice.service import neighborhood


@dataclass(frozen=True)
class ApproxPair:
    """An approximation (F, S) with F ⊆ E and S ⊆ O"""
    torus: Torus = field(repr=False)
    F: VertexSet
    S: VertexSet

    @cached_property
    def E(self) -> VertexSet:
        return self.torus.evens - self.F

    @cached_property
    def T(self) -> VertexSet:
        return self.torus.odds - self.S

    @cached_property
    def S0(self) -> VertexSet:
        """S ∩ N(E)"""
        return self.S & neighborhood(self.torus, self.E)

    @cached_property
    def E0(self) -> VertexSet:
        """E ∩ N(S)"""
        return self.E & neighborhood(self.torus, self.S)

    @cached_property
    def Q(self) -> VertexSet:
        """Vertices whose side is still undetermined"""
        return self.S0 | self.E0

    @property
    def key(self) -> tuple[int, int]:
        return self.F.mask, self.S.mask


@dataclass(frozen=True)
class BoundarySplit:
    G0_prime: VertexSet
    G0_double_prime: VertexSet
    B0_prime: VertexSet
    B0_double_prime: VertexSet


@dataclass(frozen=True)
class CoverSide:
    """One side of the U construction (the dual side swaps the roles of G, A and B, H)"""
    Q: VertexSet
    K: VertexSet
    P: VertexSet
    P_prime: VertexSet
    P_double_prime: VertexSet
    Q_prime: VertexSet
    Q_double_prime: VertexSet
    R: VertexSet
    T: VertexSet
    completed: VertexSet

    @property
    def U(self) -> VertexSet:
        return self.P_double_prime | self.T | self.completed


@dataclass(frozen=True)
class UConstruction:
    U: VertexSet
    threshold: int
    primal: CoverSide
    dual: CoverSide
    split: BoundarySplit
    covers_boundary: bool  # N(U) ⊇ G0' ∪ B0'
    near_boundary: bool  # U ⊆ N(G0' ∪ B0')
    six_clustered: bool
    u2_ratio: Optional[float]
    degenerate_threshold: bool
    cover_completed: bool


@dataclass(frozen=True)
class FirstApproximation:
    approx: ApproxPair
    large_components: int
    small_vertices: int
    contains: bool  # F ⊆ G and A ⊆ S
    excess_S: int  # |S \ A|
    missing_G: int  # |G \ F|
    app12_ratio: Optional[float]


@dataclass(frozen=True)
class RefineResult:
    approx: ApproxPair
    chosen: tuple[tuple[str, int], ...]
    stage1: ApproxPair
    stage1_bounds: bool
    contains: bool
    high_degree: bool  # v ∈ S => d_F(v) > l - ψ, v ∈ E => d_T(v) > l - ψ
    loop_variant: bool


@dataclass(frozen=True)
class ApproxParams:
    xi: Optional[float] = None  # default l/2
    psi: Optional[float] = None  # default sqrt(d)


@dataclass(frozen=True)
class PiResult:
    construction: UConstruction
    first: FirstApproximation
    refined: RefineResult

    @property
    def approx(self) -> ApproxPair:
        return self.refined.approx


@dataclass(frozen=True)
class LegalCover:
    K: VertexSet
    L: VertexSet
    M: VertexSet
    property_a: bool
    property_b: bool
    candidates: int

    @property
    def cover(self) -> VertexSet:
        return self.K | self.L | self.M


@dataclass(frozen=True)
class CoverStructure:
    U: VertexSet
    K: VertexSet
    L: VertexSet
    M: VertexSet
    is_cover: bool
    minimal: bool
    k_is_neighborhood: bool  # K = N(U \ L) inside Γ_Q
    exchange_bounds: Optional[bool] = None
    k_recovered: Optional[bool] = None


@dataclass
class ApproxAuditSummary:
    audited: int = 0
    failures: list[dict] = field(default_factory=list)
    degeneracies: int = 0
    outputs: set = field(default_factory=set)
    max_t: int = 0

    @property
    def distinct_outputs(self) -> int:
        return len(self.outputs)
