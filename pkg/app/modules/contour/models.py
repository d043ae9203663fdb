from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from app.modules.lattice.enums import Parity
from app.modules.lattice.models import Occupancy, Torus, VertexSet
from app.modules.lattice.service import internal_boundary, neighborhood, parity_class


@dataclass(frozen=True)
class GAPair:
    """A pair (G, A) with G = N(A) and A = {x : N(x) ⊆ G}

    inner is the parity class of A (odd for contours, even for the dual pair).
    """
    torus: Torus = field(repr=False)
    G: VertexSet
    A: VertexSet
    inner: Parity = Parity.ODD

    @cached_property
    def W(self) -> VertexSet:
        return self.G | self.A

    @cached_property
    def G0(self) -> VertexSet:
        """∂ⁱW"""
        return internal_boundary(self.torus, self.W)

    @cached_property
    def H(self) -> VertexSet:
        return parity_class(self.torus, self.inner.other) - self.G

    @cached_property
    def B(self) -> VertexSet:
        return parity_class(self.torus, self.inner) - self.A

    @cached_property
    def B0(self) -> VertexSet:
        """B ∩ N(G)"""
        return self.B & neighborhood(self.torus, self.G)

    @property
    def g(self) -> int:
        return len(self.G)

    @property
    def a(self) -> int:
        return len(self.A)

    @property
    def t(self) -> int:
        return len(self.G) - len(self.A)

    @property
    def delta(self) -> Fraction:
        """δ = t / g"""
        return Fraction(self.t, self.g) if self.G else Fraction(0)


@dataclass(frozen=True)
class ContourTrace:
    """Every set produced while extracting the contour of I around v0"""
    torus: Torus = field(repr=False)
    v0: int
    I: Occupancy
    delta_layer: VertexSet = field(repr=False)
    Z: VertexSet
    Z0: VertexSet
    W_prime: VertexSet
    W_double_prime: VertexSet
    C: VertexSet
    W: VertexSet
    G: VertexSet
    A: VertexSet
    G0: VertexSet

    @property
    def g(self) -> int:
        return len(self.G)

    @property
    def a(self) -> int:
        return len(self.A)

    @property
    def t(self) -> int:
        return self.g - self.a

    @property
    def delta(self) -> Fraction:
        return Fraction(self.t, self.g)


@dataclass
class ContourAuditSummary:
    audited: int = 0
    failures: list[dict] = field(default_factory=list)
    multiplicity: Counter = field(default_factory=Counter)

    @property
    def distinct_pairs(self) -> int:
        return len(self.multiplicity)

    @property
    def max_multiplicity(self) -> int:
        return max(self.multiplicity.values(), default=0)

    @property
    def ok(self) -> bool:
        return not self.failures
