import itertools
import logging
from typing import Iterable, Iterator, Optional

from app.core.budgets import require_pair_enumerable
from app.core.errors import InvariantViolation, PreconditionError
from app.modules.ensemble.enums import Boundary
from app.modules.ensemble.models import Ensemble
from app.modules.ensemble.service import boundary_region, enumerate_J
from app.modules.lattice.enums import Parity
from app.modules.lattice.models import Occupancy, Torus, VertexSet
from app.modules.lattice.service import (
    component,
    delta_set,
    edge_boundary,
    internal_boundary,
    is_c_clustered,
    is_connected,
    neighborhood,
    parity_class,
)
from .models import ContourAuditSummary, ContourTrace, GAPair

logger = logging.getLogger(__name__)


# ========================================
# The event J0
# ========================================

def in_J0(torus: Torus, I: Occupancy, v0: int, delta: Optional[VertexSet] = None) -> bool:
    """v0 ∉ Z(I)"""
    layer = delta_set(torus) if delta is None else delta
    if not layer:
        raise PreconditionError("Boundary layer is empty")
    return v0 not in boundary_region(torus, I, layer)


def enumerate_J0(e: Ensemble, v0: int) -> Iterator[Occupancy]:
    """Members of J0 in ascending mask order"""
    if e.boundary is not Boundary.EVEN:
        raise PreconditionError("J0 is defined for the even boundary only")
    return (I for I in enumerate_J(e) if in_J0(e.torus, I, v0, e.delta))


# ========================================
# Contours
# ========================================

def _closure(torus: Torus, S: VertexSet, inner: Parity) -> VertexSet:
    """{x in the inner class : N(x) ⊆ S}"""
    masks = torus.neighbor_masks
    return VertexSet.of(x for x in parity_class(torus, inner) if masks[x] & ~S.mask == 0)


def build_contour(
    torus: Torus,
    I: Occupancy,
    v0: int,
    delta: Optional[VertexSet] = None,
    check: bool = True,
) -> ContourTrace:
    """Run the chain Z -> Z0 -> W' -> W'' -> C -> W for I in J0

    With check, every contour property is asserted and InvariantViolation names
    the failed ones.
    """
    layer = delta_set(torus) if delta is None else delta
    Z = boundary_region(torus, I, layer)
    if v0 in Z:
        raise PreconditionError(f"I={sorted(I)} is not in J0 for v0={torus.coords[v0]}")
    Z0 = internal_boundary(torus, Z)
    W_prime = component(torus, Z - Z0, v0)
    W_double_prime = W_prime | _closure(torus, W_prime, Parity.ODD)
    excluded = W_double_prime - internal_boundary(torus, W_double_prime)
    seeds = layer - excluded
    if not seeds:
        raise InvariantViolation("Boundary layer swallowed by W''", {"I_mask": I.mask, "v0": v0})
    C = component(torus, excluded, seeds.min())
    W = torus.vertices - (C - internal_boundary(torus, C))
    trace = ContourTrace(
        torus=torus,
        v0=v0,
        I=I,
        delta_layer=layer,
        Z=Z,
        Z0=Z0,
        W_prime=W_prime,
        W_double_prime=W_double_prime,
        C=C,
        W=W,
        G=W & torus.evens,
        A=W & torus.odds,
        G0=internal_boundary(torus, W),
    )
    if check:
        properties = audit_trace(trace)
        failed = [name for name, holds in properties.items() if not holds]
        if failed:
            raise InvariantViolation(
                f"Contour properties failed: {', '.join(failed)}",
                {"I_mask": I.mask, "v0": v0, "failed": failed},
            )
    return trace


def audit_trace(trace: ContourTrace) -> dict[str, bool]:
    """Named contour predicates evaluated on one trace"""
    torus, I, W, G, A, G0 = trace.torus, trace.I, trace.W, trace.G, trace.A, trace.G0
    complement = torus.vertices - (W - G0)
    return {
        "GA0": trace.v0 in A and W.isdisjoint(trace.delta_layer),
        "GA1": is_connected(torus, trace.C) and is_connected(torus, W),
        "GA2": G0 == internal_boundary(torus, trace.C),
        "GA3": G == neighborhood(torus, A) and A == _closure(torus, G, Parity.ODD),
        "GA5": G0.isdisjoint(I),
        "GA6": neighborhood(torus, G0) & I <= A,
        "GA7": G0 <= neighborhood(torus, A & I),
        "G0_clustered": is_c_clustered(torus, G0, 2),
        "G0_within_W": is_c_clustered(torus, G0, 2, within=W),
        "G0_within_complement": is_c_clustered(torus, G0, 2, within=complement),
        "nabla_identity": (
            edge_boundary(torus, W, torus.vertices - W) == trace.t * torus.degree
            and edge_boundary(torus, G0, torus.odds - A) == trace.t * torus.degree
        ),
    }


# ========================================
# (G, A) pairs
# ========================================

def satisfies_ga3(pair: GAPair) -> bool:
    return pair.G == neighborhood(pair.torus, pair.A) and pair.A == _closure(pair.torus, pair.G, pair.inner)


def ga_pair_of(trace: ContourTrace) -> GAPair:
    return GAPair(torus=trace.torus, G=trace.G, A=trace.A)


def ga_pair_from_A(torus: Torus, A: VertexSet, inner: Parity = Parity.ODD) -> Optional[GAPair]:
    """The pair (N(A), A) when A is closed, otherwise None"""
    pair = GAPair(torus=torus, G=neighborhood(torus, A), A=A, inner=inner)
    return pair if satisfies_ga3(pair) else None


def enumerate_GA_pairs(torus: Torus, v0: Optional[int], g: int, t: int) -> Iterator[GAPair]:
    """All pairs with |G| = g, |A| = g - t and v0 ∈ A (any A when v0 is None)"""
    odds = list(torus.odds)
    require_pair_enumerable(len(odds))
    a = g - t
    if a < 1 or g < 1:
        return iter(())
    if v0 is None:
        pool, base, size = odds, 0, a
    else:
        if not torus.odd[v0]:
            raise PreconditionError(f"v0={torus.coords[v0]} must be odd")
        pool, base, size = [x for x in odds if x != v0], 1 << v0, a - 1
    return _pairs(torus, pool, base, size, g)


def _pairs(torus: Torus, pool: list[int], base: int, size: int, g: int) -> Iterator[GAPair]:
    for chosen in itertools.combinations(pool, size):
        A = VertexSet(base | sum(1 << x for x in chosen))
        G = neighborhood(torus, A)
        if len(G) != g:
            continue
        pair = ga_pair_from_A(torus, A)
        if pair is not None:
            yield pair


def dual_pair(pair: GAPair) -> GAPair:
    """(O minus A, E minus G) with the parity roles swapped; t is unchanged"""
    torus = pair.torus
    return GAPair(
        torus=torus,
        G=parity_class(torus, pair.inner) - pair.A,
        A=parity_class(torus, pair.inner.other) - pair.G,
        inner=pair.inner.other,
    )


# ========================================
# Audits
# ========================================

def contour_audit(torus: Torus, Is: Iterable[Occupancy], v0: int, delta: Optional[VertexSet] = None) -> tuple[ContourAuditSummary, list[tuple[ContourTrace, dict[str, bool]]]]:
    """Audit the contour of every I and count how many I share each (G, A)"""
    summary = ContourAuditSummary()
    rows = []
    for I in Is:
        trace = build_contour(torus, I, v0, delta, check=False)
        properties = audit_trace(trace)
        summary.audited += 1
        summary.multiplicity[(trace.G.mask, trace.A.mask)] += 1
        failed = [name for name, holds in properties.items() if not holds]
        if failed:
            summary.failures.append({"I_mask": I.mask, "v0": v0, "failed": failed})
            logger.debug("Contour of %s failed %s", sorted(I), failed)
        rows.append((trace, properties))
    logger.info(
        "Audited %d contours: %d failures, %d distinct pairs (max multiplicity %d)",
        summary.audited, len(summary.failures), summary.distinct_pairs, summary.max_multiplicity,
    )
    return summary, rows
