from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from app.modules.lattice.models import Torus, VertexSet
from .enums import Boundary

# Exact non-negative activity λ
Activity = Fraction


@dataclass(frozen=True)
class Ensemble:
    """Hard-core ensemble on a torus conditioned on a frozen set"""
    torus: Torus
    boundary: Boundary
    delta: VertexSet
    frozen: VertexSet
    extra_frozen: VertexSet = VertexSet()


@dataclass(frozen=True)
class ExactMeasure:
    """Conditioned hard-core measure with its normalizer

    For λ > 0 the normalizer is the partition function. For λ = 0 the measure is
    the λ -> 0+ limit, uniform on the minimum-cardinality members of J.
    """
    ensemble: Ensemble
    activity: Activity
    partition_function: Fraction
    normalizer: Fraction
    min_size: int


@dataclass(frozen=True)
class ConditionalOccupationReport:
    v0: int
    applicable: bool
    conditional: Optional[Fraction]
    expected: Fraction
    holds: bool


@dataclass(frozen=True)
class LowerBoundReport:
    v0: int
    occupation: Fraction
    bound: Fraction
    holds: bool
