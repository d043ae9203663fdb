import itertools
import logging
from functools import lru_cache
from typing import Iterable, Optional

import networkx as nx
from networkx.utils import UnionFind

from app.core.budgets import require_vertex_budget
from app.core.errors import PreconditionError
from .enums import Parity
from .models import Direction, Torus, VertexSet

logger = logging.getLogger(__name__)


# ========================================
# Construction and coordinates
# ========================================

def make_torus(d: int, M: int) -> Torus:
    """Build the torus with (2M)^d vertices and precomputed neighbor lists"""
    if d < 1:
        raise PreconditionError(f"Dimension must be positive, got d={d}")
    if M < 2:
        raise PreconditionError(f"Half-side must be at least 2 (M={M} gives parallel edges)")
    side = 2 * M
    require_vertex_budget(side ** d)
    return _build_torus(d, M)


@lru_cache(maxsize=None)
def _build_torus(d: int, M: int) -> Torus:
    side = 2 * M
    count = side ** d
    # Row-major over coordinates shifted to {0, ..., 2M-1}
    coords = tuple(
        tuple(c - (M - 1) for c in shifted)
        for shifted in itertools.product(range(side), repeat=d)
    )
    strides = [side ** (d - 1 - axis) for axis in range(d)]

    def shifted_index(v: int, axis: int, step: int) -> int:
        offset = (v // strides[axis]) % side
        return v + (((offset + step) % side) - offset) * strides[axis]

    shifts: dict[int, tuple[int, ...]] = {}
    for axis in range(d):
        shifts[axis + 1] = tuple(shifted_index(v, axis, 1) for v in range(count))
        shifts[-(axis + 1)] = tuple(shifted_index(v, axis, -1) for v in range(count))

    neighbors = tuple(
        tuple(shifts[j][v] for j in directions(d))
        for v in range(count)
    )
    neighbor_masks = tuple(sum(1 << u for u in nbrs) for nbrs in neighbors)
    odd = tuple(sum(c) % 2 == 1 for c in coords)
    odd_mask = sum(1 << v for v in range(count) if odd[v])
    logger.debug("Built torus d=%d M=%d with %d vertices", d, M, count)
    return Torus(
        d=d,
        M=M,
        side=side,
        vertex_count=count,
        coords=coords,
        neighbors=neighbors,
        neighbor_masks=neighbor_masks,
        odd=odd,
        even_mask=((1 << count) - 1) & ~odd_mask,
        odd_mask=odd_mask,
        shifts=shifts,
    )


def directions(d: int) -> list[Direction]:
    """All directions in canonical order: +1, -1, +2, -2, ..."""
    return [sign * k for k in range(1, d + 1) for sign in (1, -1)]


def check_direction(torus: Torus, j: Direction) -> Direction:
    if j == 0 or abs(j) > torus.d:
        raise PreconditionError(f"Direction must be in +-1..+-{torus.d}, got {j}")
    return j


def vertex_index(torus: Torus, point: Iterable[int]) -> int:
    """Index of the vertex with the given coordinates (any integers, reduced mod 2M)"""
    point = tuple(point)
    if len(point) != torus.d:
        raise PreconditionError(f"Expected {torus.d} coordinates, got {len(point)}")
    index = 0
    for c in point:
        index = index * torus.side + (c + torus.M - 1) % torus.side
    return index


def coords(torus: Torus, v: int) -> tuple[int, ...]:
    return torus.coords[v]


def parity(torus: Torus, v: int) -> Parity:
    """EVEN iff the coordinate sum is even"""
    return Parity.ODD if torus.odd[v] else Parity.EVEN


def parity_class(torus: Torus, p: Parity) -> VertexSet:
    return torus.odds if p is Parity.ODD else torus.evens


def shift(torus: Torus, v: int, j: Direction) -> int:
    """sigma_j(v) = v + e_j with cyclic wrap"""
    return torus.shifts[check_direction(torus, j)][v]


def shift_set(torus: Torus, S: VertexSet, j: Direction) -> VertexSet:
    table = torus.shifts[check_direction(torus, j)]
    return VertexSet.of(table[v] for v in S)


@lru_cache(maxsize=None)
def delta_set(torus: Torus) -> VertexSet:
    """Image of the box boundary: vertices with some coordinate equal to M"""
    return VertexSet.of(
        v for v, point in enumerate(torus.coords) if torus.M in point
    )


def distance(torus: Torus, u: int, v: int) -> int:
    """Graph distance in the torus (wrapped l1)"""
    total = 0
    for a, b in zip(torus.coords[u], torus.coords[v]):
        gap = abs(a - b)
        total += min(gap, torus.side - gap)
    return total


# ========================================
# Neighborhoods and boundaries
# ========================================

def neighborhood_mask(torus: Torus, mask: int) -> int:
    result = 0
    masks = torus.neighbor_masks
    while mask:
        low = mask & -mask
        result |= masks[low.bit_length() - 1]
        mask ^= low
    return result


def neighbors(torus: Torus, v: int) -> VertexSet:
    return VertexSet(torus.neighbor_masks[v])


def neighborhood(torus: Torus, S: VertexSet) -> VertexSet:
    """N(S), the union of the neighborhoods of S"""
    return VertexSet(neighborhood_mask(torus, S.mask))


def external_boundary(torus: Torus, S: VertexSet) -> VertexSet:
    """∂S = N(S) \\ S"""
    return VertexSet(neighborhood_mask(torus, S.mask) & ~S.mask)


def internal_boundary(torus: Torus, S: VertexSet) -> VertexSet:
    """∂ⁱS = {v in S : N(v) not contained in S}"""
    masks = torus.neighbor_masks
    return VertexSet.of(v for v in S if masks[v] & ~S.mask)


def edge_boundary(torus: Torus, S: VertexSet, T: VertexSet) -> int:
    """|∇(S, T)|, the number of edges with one end in S and the other in T"""
    masks = torus.neighbor_masks
    return sum((masks[v] & T.mask).bit_count() for v in S)


def degree_in(torus: Torus, v: int, S: VertexSet) -> int:
    """d_S(v) = |N(v) ∩ S|"""
    return (torus.neighbor_masks[v] & S.mask).bit_count()


def is_independent(torus: Torus, S: VertexSet) -> bool:
    masks = torus.neighbor_masks
    return all(masks[v] & S.mask == 0 for v in S)


def induced_subgraph(torus: Torus, S: VertexSet) -> nx.Graph:
    """Subgraph of the torus induced by S as a networkx graph"""
    graph = nx.Graph()
    graph.add_nodes_from(S)
    masks = torus.neighbor_masks
    for v in S:
        for u in VertexSet(masks[v] & S.mask):
            if u > v:
                graph.add_edge(v, u)
    return graph


# ========================================
# Connectivity
# ========================================

def _grow(torus: Torus, allowed: int, seed_mask: int) -> int:
    reached = seed_mask
    frontier = seed_mask
    while frontier:
        frontier = neighborhood_mask(torus, frontier) & allowed & ~reached
        reached |= frontier
    return reached


def reachable(torus: Torus, allowed: VertexSet, seeds: VertexSet) -> VertexSet:
    """Vertices of allowed joined to seeds ∩ allowed by a path inside allowed"""
    return VertexSet(_grow(torus, allowed.mask, seeds.mask & allowed.mask))


def component(torus: Torus, excluded: VertexSet, seed: int) -> VertexSet:
    """Vertex set of the component of Γ - excluded containing seed"""
    if seed in excluded:
        raise PreconditionError(f"Seed {torus.coords[seed]} lies in the excluded set")
    return VertexSet(_grow(torus, torus.full_mask & ~excluded.mask, 1 << seed))


def components(torus: Torus, S: VertexSet) -> list[VertexSet]:
    """Components of the subgraph induced by S, ordered by smallest vertex"""
    found = []
    remaining = S.mask
    while remaining:
        low = remaining & -remaining
        part = _grow(torus, S.mask, low)
        found.append(VertexSet(part))
        remaining &= ~part
    return found


def is_connected(torus: Torus, S: VertexSet) -> bool:
    return len(components(torus, S)) <= 1


def ball(torus: Torus, v: int, radius: int, within: Optional[VertexSet] = None) -> VertexSet:
    """Vertices at distance <= radius from v inside the subgraph induced by within"""
    allowed = torus.full_mask if within is None else within.mask | (1 << v)
    reached = 1 << v
    frontier = reached
    for _ in range(radius):
        frontier = neighborhood_mask(torus, frontier) & allowed & ~reached
        if not frontier:
            break
        reached |= frontier
    return VertexSet(reached)


def is_c_clustered(
    torus: Torus,
    T: VertexSet,
    c: int,
    within: Optional[VertexSet] = None,
) -> bool:
    """True iff T is connected under the relation 'distance <= c' (distances in within)"""
    if c < 1:
        raise PreconditionError(f"Clustering distance must be at least 1, got {c}")
    if len(T) <= 1:
        return True
    clusters = UnionFind(T)
    for v in T:
        for u in ball(torus, v, c, within) & T:
            clusters.union(v, u)
    return len(list(clusters.to_sets())) == 1


def distance_to_set(torus: Torus, v: int, S: VertexSet) -> Optional[int]:
    """dist(v, S) in the torus, None for empty S"""
    if not S:
        return None
    return min(distance(torus, v, u) for u in S)


def lconn_check(torus: Torus, S: VertexSet, T: VertexSet, a: int, b: int) -> dict[str, bool]:
    """Hypotheses and conclusion of the clustering transfer lemma on one instance"""
    close_s = all((distance_to_set(torus, x, T) or 0) <= b for x in S) if T else not S
    close_t = all((distance_to_set(torus, y, S) or 0) <= b for y in T) if S else not T
    return {
        "S_clustered": is_c_clustered(torus, S, a),
        "S_close_to_T": close_s,
        "T_close_to_S": close_t,
        "T_clustered": is_c_clustered(torus, T, a + 2 * b),
    }


def internal_boundary_lemma_check(torus: Torus, S: VertexSet) -> bool:
    """For every component T of Γ - (S minus ∂ⁱS): ∂ⁱT ⊆ ∂ⁱS"""
    boundary = internal_boundary(torus, S)
    rest = torus.vertices - (S - boundary)
    return all(internal_boundary(torus, part) <= boundary for part in components(torus, rest))
