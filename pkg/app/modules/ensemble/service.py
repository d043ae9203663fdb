import itertools
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Optional, Sequence, Union

from app.core.budgets import require_enumerable
from app.core.config import settings
from app.core.errors import PreconditionError, UsageError, require
from app.modules.lattice.models import Occupancy, Torus, VertexSet
from app.modules.lattice.service import (
    component,
    delta_set,
    is_independent,
    neighborhood_mask,
    vertex_index,
)
from .enums import Boundary
from .models import (
    Activity,
    ConditionalOccupationReport,
    Ensemble,
    ExactMeasure,
    LowerBoundReport,
)

logger = logging.getLogger(__name__)


# ========================================
# Construction
# ========================================

def parse_activity(value: Union[str, int, Fraction]) -> Activity:
    """Exact activity from "p/q", a decimal string, an int or a Fraction"""
    try:
        activity = Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise UsageError(f"Cannot parse activity {value!r}: {exc}") from exc
    if activity < 0:
        raise UsageError(f"Activity must be non-negative, got {activity}")
    return activity


def make_ensemble(
    torus: Torus,
    boundary: Boundary,
    delta: Optional[VertexSet] = None,
    extra_frozen: Optional[VertexSet] = None,
) -> Ensemble:
    """Ensemble conditioned on the boundary layer (Δ by default) plus extra frozen vertices"""
    layer = delta_set(torus) if delta is None else delta
    if boundary is Boundary.EVEN:
        base = layer & torus.evens
    elif boundary is Boundary.ODD:
        base = layer & torus.odds
    else:
        base = VertexSet()
    extra = extra_frozen or VertexSet()
    frozen = base | extra
    if not is_independent(torus, frozen):
        raise PreconditionError(f"Frozen set {sorted(frozen)} is not independent")
    return Ensemble(torus=torus, boundary=boundary, delta=layer, frozen=frozen, extra_frozen=extra)


def with_frozen(e: Ensemble, extra: VertexSet) -> Ensemble:
    """Same ensemble with additional frozen vertices"""
    return make_ensemble(e.torus, e.boundary, e.delta, e.extra_frozen | extra)


def site(torus: Torus, v0: Union[int, Sequence[int]]) -> int:
    """Vertex index from an index or a coordinate tuple"""
    if isinstance(v0, int):
        if not 0 <= v0 < torus.vertex_count:
            raise PreconditionError(f"Vertex index {v0} outside the torus")
        return v0
    return vertex_index(torus, v0)


# ========================================
# Enumeration of J
# ========================================

def free_vertices(e: Ensemble) -> list[int]:
    """Vertices that are neither frozen nor adjacent to a frozen vertex, highest index first"""
    torus = e.torus
    blocked = e.frozen.mask | neighborhood_mask(torus, e.frozen.mask)
    return [v for v in range(torus.vertex_count - 1, -1, -1) if not (blocked >> v) & 1]


def _walk(free: list[int], i: int, current: int, blocked: int, masks: tuple[int, ...]) -> Iterator[int]:
    if i == len(free):
        yield current
        return
    v = free[i]
    yield from _walk(free, i + 1, current, blocked, masks)
    if not (blocked >> v) & 1:
        yield from _walk(free, i + 1, current | (1 << v), blocked | masks[v], masks)


def enumerate_J(e: Ensemble, prefix: Sequence[bool] = ()) -> Iterator[Occupancy]:
    """Every independent set containing the frozen set, in ascending mask order

    prefix fixes the decisions on the first len(prefix) free vertices (highest
    index first); the prefixes of one length partition J.
    """
    require_enumerable(e.torus.vertex_count)
    free = free_vertices(e)
    if len(prefix) > len(free):
        raise PreconditionError(f"Prefix of length {len(prefix)} exceeds {len(free)} free vertices")
    masks = e.torus.neighbor_masks
    current = e.frozen.mask
    blocked = 0
    for v, take in zip(free, prefix):
        if take:
            if (blocked >> v) & 1:
                return iter(())
            current |= 1 << v
            blocked |= masks[v]
    return (VertexSet(mask) for mask in _walk(free, len(prefix), current, blocked, masks))


def prefixes(e: Ensemble, depth: int) -> list[tuple[bool, ...]]:
    """All decision prefixes of the given depth (capped by the number of free vertices)"""
    depth = max(0, min(depth, len(free_vertices(e))))
    return list(itertools.product((False, True), repeat=depth))


def _partition_counts(e: Ensemble, prefix: tuple[bool, ...]) -> Counter:
    return Counter(len(I) for I in enumerate_J(e, prefix))


def size_counts(e: Ensemble, workers: int = 1) -> tuple[int, ...]:
    """Coefficients c_k = #{I in J : |I| = k}"""
    if workers <= 1:
        return _size_counts(e)
    require_enumerable(e.torus.vertex_count)
    parts = prefixes(e, max(1, (4 * workers - 1).bit_length()))
    merged: Counter = Counter()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for counts in pool.map(_partition_counts, itertools.repeat(e), parts):
            merged.update(counts)
    return _as_coefficients(merged)


@lru_cache(maxsize=256)
def _size_counts(e: Ensemble) -> tuple[int, ...]:
    counts = _partition_counts(e, ())
    logger.debug("Enumerated %d members of J (%s boundary)", sum(counts.values()), e.boundary.value)
    return _as_coefficients(counts)


def _as_coefficients(counts: Counter) -> tuple[int, ...]:
    top = max(counts) if counts else -1
    return tuple(counts.get(k, 0) for k in range(top + 1))


# ========================================
# Exact measures
# ========================================

def partition_function(e: Ensemble, activity: Activity) -> Fraction:
    """Σ_{I in J} λ^{|I|}, which is 0^{|frozen|} at λ = 0"""
    activity = Fraction(activity)
    return sum((activity ** k * c for k, c in enumerate(size_counts(e))), Fraction(0))


def exact_measure(e: Ensemble, activity: Activity) -> ExactMeasure:
    activity = Fraction(activity)
    counts = size_counts(e)
    z = partition_function(e, activity)
    min_size = next(k for k, c in enumerate(counts) if c)
    normalizer = z if activity > 0 else Fraction(counts[min_size])
    return ExactMeasure(
        ensemble=e,
        activity=activity,
        partition_function=z,
        normalizer=normalizer,
        min_size=min_size,
    )


def weight(measure: ExactMeasure, I: Occupancy) -> Fraction:
    """Unnormalized weight of I (limit weights at λ = 0)"""
    if measure.activity > 0:
        return measure.activity ** len(I)
    return Fraction(1) if len(I) == measure.min_size else Fraction(0)


def probability(measure: ExactMeasure, event: Callable[[Occupancy], bool]) -> Fraction:
    total = Fraction(0)
    for I in enumerate_J(measure.ensemble):
        if event(I):
            total += weight(measure, I)
    return total / measure.normalizer


def occupation_probability(e: Ensemble, activity: Activity, v0: int) -> Fraction:
    """μ(v0 ∈ I) under the conditioned measure"""
    require_enumerable(e.torus.vertex_count)
    if v0 in e.frozen:
        return Fraction(1)
    if e.torus.neighbor_masks[v0] & e.frozen.mask:
        return Fraction(0)
    return probability(exact_measure(e, activity), lambda I: v0 in I)


def boundary_region(torus: Torus, I: Occupancy, delta: VertexSet) -> VertexSet:
    """Z(I): the component of Γ - (I ∩ O) containing Δ"""
    excluded = I & torus.odds
    seeds = delta - excluded
    if not seeds:
        return VertexSet()
    region = component(torus, excluded, seeds.min())
    if settings.DEBUG:
        require(seeds <= region, "Z(I) depends on the choice of Δ-seed", I_mask=I.mask)
    return region


def prob_J0(e: Ensemble, activity: Activity, v0: int) -> Fraction:
    """μ^e(v0 ∉ Z(I))"""
    if e.boundary is not Boundary.EVEN:
        raise PreconditionError("prob_J0 is defined for the even boundary only")
    if not e.torus.odd[v0]:
        raise PreconditionError(f"v0={e.torus.coords[v0]} must be odd")
    torus, delta = e.torus, e.delta
    return probability(exact_measure(e, activity), lambda I: v0 not in boundary_region(torus, I, delta))


def is_unconstrained(e: Ensemble, v0: int) -> bool:
    """v0 is unfrozen with no frozen neighbor"""
    return v0 not in e.frozen and not e.torus.neighbor_masks[v0] & e.frozen.mask


def conditional_occupation_identity_check(
    e: Ensemble,
    activity: Activity,
    v0: int,
) -> ConditionalOccupationReport:
    """μ(v0 ∈ I | N(v0) ∩ I = ∅) against λ/(1+λ)"""
    activity = Fraction(activity)
    expected = activity / (1 + activity)
    if not is_unconstrained(e, v0):
        return ConditionalOccupationReport(v0=v0, applicable=False, conditional=None, expected=expected, holds=True)
    measure = exact_measure(e, activity)
    nbrs = e.torus.neighbor_masks[v0]
    vacant = probability(measure, lambda I: not I.mask & nbrs)
    occupied = probability(measure, lambda I: v0 in I)
    conditional = occupied / vacant
    return ConditionalOccupationReport(
        v0=v0,
        applicable=True,
        conditional=conditional,
        expected=expected,
        holds=conditional == expected,
    )


def lower_bound_check(e: Ensemble, activity: Activity, v0: int) -> LowerBoundReport:
    """μ(v0 ∈ I) ≥ (1+λ)^{-2d} λ/(1+λ) for an unconstrained site"""
    if not is_unconstrained(e, v0):
        raise PreconditionError(f"v0={e.torus.coords[v0]} is frozen or next to a frozen vertex")
    activity = Fraction(activity)
    occupation = occupation_probability(e, activity, v0)
    bound = (1 + activity) ** (-e.torus.degree) * activity / (1 + activity)
    return LowerBoundReport(v0=v0, occupation=occupation, bound=bound, holds=occupation >= bound)
