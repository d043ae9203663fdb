from dataclasses import dataclass
from fractions import Fraction
from typing import Optional


@dataclass(frozen=True)
class BallCounts:
    """Exact ℓ1 sphere and ball sizes in Z^d for radii 0 .. r_max

    s[q][t] counts the points of S(q) with exactly t nonzero coordinates and
    b_strata[r][t] those of B(r); support[q] is the average support t(q).
    """
    d: int
    r_max: int
    s: tuple[int, ...]
    b: tuple[int, ...]
    s_strata: tuple[tuple[int, ...], ...]
    b_strata: tuple[tuple[int, ...], ...]
    support: tuple[Fraction, ...]


@dataclass(frozen=True)
class DeltaLowerReport:
    g: int
    t: int
    g0: int
    delta: Fraction
    g0_within_gradient: bool  # |G0| ≤ δgℓ
    g0_within_half_gradient: bool  # |G0| ≤ δgd
    boundary_identity: bool  # ∂((G \ G0) ∪ A) = G0
    bl_applicable: bool  # |G0| ≤ |A|
    bl_bound: Optional[int]
    bl_holds: bool
    ratio: float  # δ / (g^{-1/d} / d)

    @property
    def ok(self) -> bool:
        return self.g0_within_gradient and self.boundary_identity and self.bl_holds


@dataclass(frozen=True)
class TreeCountReport:
    n: int
    max_degree: int
    count: int
    bound: float  # (eD)^n

    @property
    def holds(self) -> bool:
        return self.count <= self.bound


@dataclass(frozen=True)
class TqBoundReport:
    d: int
    q: int
    beta: Fraction
    t0: int
    support: Fraction  # t(q)
    support_bound: Fraction  # (1 - 1/(20β)) d
    f_values: dict[int, Fraction]  # f(q, t) for t0 ≤ t < min(q, d)

    @property
    def support_holds(self) -> bool:
        return self.support < self.support_bound

    @property
    def f_holds(self) -> bool:
        return all(f < Fraction(1, 2) for f in self.f_values.values())

    @property
    def ok(self) -> bool:
        return self.support_holds and self.f_holds


@dataclass(frozen=True)
class Goal1Point:
    r: int
    b: int
    s: int
    goal1_ratio: float  # s(r) / b(r)^{1-1/d}
    bl_ratio: float  # s(r+1) / b(r)^{1-1/d}, the boundary of the ball against its volume
