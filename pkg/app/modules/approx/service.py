import itertools
import logging
import math
from decimal import ROUND_HALF_UP, Decimal
from typing import Hashable, Iterable, Optional

import networkx as nx

from app.core.budgets import require_cover_searchable
from app.core.errors import InvariantViolation, PreconditionError
from app.modules.contour.models import GAPair
from app.modules.contour.service import dual_pair
from app.modules.lattice.models import Direction, Torus, VertexSet
from app.modules.lattice.service import (
    components,
    degree_in,
    induced_subgraph,
    is_c_clustered,
    neighborhood,
    neighborhood_mask,
    reachable,
    shift_set,
)
from .models import (
    ApproxAuditSummary,
    ApproxPair,
    ApproxParams,
    BoundarySplit,
    CoverSide,
    CoverStructure,
    FirstApproximation,
    LegalCover,
    PiResult,
    RefineResult,
    UConstruction,
)

logger = logging.getLogger(__name__)


# ========================================
# Graph helpers
# ========================================

def _graph_neighborhood(graph: nx.Graph, nodes: Iterable[Hashable]) -> set:
    found: set = set()
    for v in nodes:
        found.update(graph.adj[v])
    return found


def quad_holds(graph: nx.Graph) -> bool:
    """For every edge v~w and every L ⊆ N(v): |N(w) ∩ N(L)| ≥ |L|"""
    for v, w in graph.edges:
        for first, second in ((v, w), (w, v)):
            around = sorted(graph.adj[first])
            target = set(graph.adj[second])
            for size in range(1, len(around) + 1):
                for L in itertools.combinations(around, size):
                    if len(target & _graph_neighborhood(graph, L)) < size:
                        return False
    return True


def check_quad(torus: Torus) -> bool:
    """The covering property of neighborhoods, checked exhaustively on the torus"""
    masks = torus.neighbor_masks
    for v in range(torus.vertex_count):
        around = torus.neighbors[v]
        for w in around:
            for size in range(1, len(around) + 1):
                for L in itertools.combinations(around, size):
                    joint = 0
                    for u in L:
                        joint |= masks[u]
                    if (masks[w] & joint).bit_count() < size:
                        return False
    return True


def matching_certificate(torus: Torus, v: int, w: int) -> bool:
    """Γ[(N(v) ∪ N(w)) minus {v, w}] is a matching missing at most one vertex on each side"""
    rest = VertexSet(torus.neighbor_masks[v] | torus.neighbor_masks[w]) - VertexSet.of((v, w))
    graph = induced_subgraph(torus, rest)
    if any(graph.degree(u) > 1 for u in graph):
        return False
    left = [u for u in torus.neighbors[v] if u != w and graph.degree(u) == 0]
    right = [u for u in torus.neighbors[w] if u != v and graph.degree(u) == 0]
    return len(left) <= 1 and len(right) <= 1


def separates(torus: Torus, separator: VertexSet, P: VertexSet, Q: VertexSet) -> bool:
    """Every path meeting both P and Q meets the separator"""
    start = P - separator
    if not start:
        return True
    reached = reachable(torus, torus.vertices - separator, start)
    return reached.isdisjoint(Q - separator)


def bigraph_from_torus(torus: Torus, X: VertexSet, Y: VertexSet) -> nx.Graph:
    """Bipartite graph of the torus edges between X and Y"""
    graph = nx.Graph()
    graph.add_nodes_from(X, bipartite=0)
    graph.add_nodes_from(Y, bipartite=1)
    for x in X:
        for y in VertexSet(torus.neighbor_masks[x] & Y.mask):
            graph.add_edge(x, y)
    return graph


# ========================================
# Boundary split and the covering set U
# ========================================

def boundary_split(pair: GAPair) -> BoundarySplit:
    """Split G0 and B0 by the degree towards the inner side"""
    torus = pair.torus
    half = torus.degree / 2
    G0_prime = VertexSet.of(v for v in pair.G if degree_in(torus, v, pair.A) <= half)
    B0_prime = VertexSet.of(v for v in pair.B if degree_in(torus, v, pair.H) <= half)
    return BoundarySplit(
        G0_prime=G0_prime,
        G0_double_prime=pair.G0 - G0_prime,
        B0_prime=B0_prime,
        B0_double_prime=pair.B0 - B0_prime,
    )


def split_properties(pair: GAPair, split: BoundarySplit) -> dict[str, bool]:
    torus = pair.torus
    no_cross_edges = not neighborhood_mask(torus, split.G0_double_prime.mask) & split.B0_double_prime.mask
    separator = split.G0_prime | split.B0_prime
    return {
        "GOBO": no_cross_edges,
        "sep": separates(torus, separator, pair.W, torus.vertices - pair.W),
    }


def lovasz_stein_cover(graph: nx.Graph, X: Iterable[Hashable], Y: Iterable[Hashable], a: int, b: int) -> set:
    """Greedy cover of X by vertices of Y, of size at most (|Y|/a)(1 + ln b)"""
    X, order = set(X), sorted(Y)
    Y = set(order)
    if a < 1:
        raise PreconditionError(f"Minimum degree a must be positive, got {a}")
    for x in X:
        if len(Y & set(graph.adj[x])) < a:
            raise PreconditionError(f"Vertex {x!r} has fewer than a={a} neighbors in Y")
    for y in order:
        if len(X & set(graph.adj[y])) > b:
            raise PreconditionError(f"Vertex {y!r} has more than b={b} neighbors in X")
    uncovered = set(X)
    chosen: set = set()
    while uncovered:
        # Most newly covered vertices, earliest in sorted order on ties
        _, _, best = max((len(uncovered & set(graph.adj[y])), -rank, y) for rank, y in enumerate(order))
        chosen.add(best)
        uncovered -= set(graph.adj[best])
    return chosen


def lovasz_stein_bound(size_Y: int, a: int, b: int) -> float:
    return size_Y / a * (1 + math.log(b)) if b > 0 else 0.0


def cover_threshold(torus: Torus) -> int:
    """√(l ln l) rounded half up"""
    l = torus.degree
    return int(Decimal(math.sqrt(l * math.log(l))).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _cover_side(pair: GAPair, threshold: int) -> CoverSide:
    """S ⊆ N(G0') with N(S) ⊇ G0', built from degrees into A, K and G0"""
    torus = pair.torus
    half = torus.degree / 2
    G0, A = pair.G0, pair.A
    G0_prime = VertexSet.of(v for v in pair.G if degree_in(torus, v, A) <= half)
    Q = VertexSet.of(v for v in G0 if degree_in(torus, v, A) <= threshold)
    K = G0 - Q
    P = neighborhood(torus, Q) & A
    P_prime = VertexSet.of(v for v in P if degree_in(torus, v, K) >= half)
    P_double_prime = P - P_prime
    Q_prime = Q & neighborhood(torus, P_prime)
    Q_double_prime = Q - Q_prime
    R = VertexSet.of(
        v for v in pair.B0 & neighborhood(torus, G0_prime)
        if degree_in(torus, v, G0) > threshold
    )
    X = G0_prime - Q_double_prime
    coverable = X & neighborhood(torus, R)
    stranded = X - coverable
    T = VertexSet()
    if coverable:
        graph = bigraph_from_torus(torus, coverable, R)
        a = min(degree_in(torus, x, R) for x in coverable)
        b = max(degree_in(torus, y, coverable) for y in R)
        T = VertexSet.of(lovasz_stein_cover(graph, coverable, R, a, b))
    completed = VertexSet.of(min(torus.neighbors[x]) for x in stranded)
    return CoverSide(
        Q=Q,
        K=K,
        P=P,
        P_prime=P_prime,
        P_double_prime=P_double_prime,
        Q_prime=Q_prime,
        Q_double_prime=Q_double_prime,
        R=R,
        T=T,
        completed=completed,
    )


def build_U(pair: GAPair) -> UConstruction:
    """A set U near the boundary whose neighborhood covers G0' ∪ B0'"""
    torus = pair.torus
    l = torus.degree
    threshold = cover_threshold(torus)
    split = boundary_split(pair)
    primal = _cover_side(pair, threshold)
    dual = _cover_side(dual_pair(pair), threshold)
    U = primal.U | dual.U
    boundary = split.G0_prime | split.B0_prime
    ratio = None
    if pair.t > 0 and l > 1:
        ratio = len(U) / (pair.t * math.sqrt(math.log(l) / l))
    degenerate = threshold >= l / 2
    completed = bool(primal.completed or dual.completed)
    if completed:
        logger.warning("Cover of the boundary completed from stranded vertices (t=%d)", pair.t)
    return UConstruction(
        U=U,
        threshold=threshold,
        primal=primal,
        dual=dual,
        split=split,
        covers_boundary=boundary <= neighborhood(torus, U),
        near_boundary=U <= neighborhood(torus, boundary),
        six_clustered=is_c_clustered(torus, U, 6),
        u2_ratio=ratio,
        degenerate_threshold=degenerate,
        cover_completed=completed,
    )


# ========================================
# Approximations
# ========================================

def first_approximation(U: VertexSet, pair: GAPair) -> FirstApproximation:
    """(F, S) from the large components of Γ - N(U) inside W and all small components"""
    torus = pair.torus
    L = neighborhood(torus, U)
    if not separates(torus, L, pair.W, torus.vertices - pair.W):
        raise PreconditionError("N(U) does not separate W from its complement")
    large = VertexSet()
    small = VertexSet()
    large_count = 0
    for part in components(torus, torus.vertices - L):
        if len(part) > torus.d:
            if not part.isdisjoint(pair.W):
                large = large | part
                large_count += 1
        else:
            small = small | part
    F = large & torus.evens
    S = (large | small | L) & torus.odds
    excess_S = len(S - pair.A)
    missing_G = len(pair.G - F)
    ratio = None
    scale = pair.t * math.sqrt(torus.d * math.log(torus.d)) if torus.d > 1 else 0.0
    if scale > 0:
        ratio = max(excess_S, missing_G) / scale
    return FirstApproximation(
        approx=ApproxPair(torus=torus, F=F, S=S),
        large_components=large_count,
        small_vertices=len(small),
        contains=F <= pair.G and pair.A <= S,
        excess_S=excess_S,
        missing_G=missing_G,
        app12_ratio=ratio,
    )


def _first_eligible(torus: Torus, candidates: VertexSet, target: VertexSet, threshold: float) -> Optional[int]:
    for w in candidates:
        if degree_in(torus, w, target) >= threshold:
            return w
    return None


def _refine_pass(
    torus: Torus,
    F: VertexSet,
    S: VertexSet,
    pair: GAPair,
    threshold: float,
    label: str,
    chosen: list[tuple[str, int]],
) -> tuple[VertexSet, VertexSet, bool]:
    variant = True
    # Remove the odd neighborhoods of heavy vertices of H
    while (w := _first_eligible(torus, pair.H, S, threshold)) is not None:
        before = len(S)
        S = S - neighborhood(torus, VertexSet.of((w,)))
        variant = variant and before - len(S) >= threshold and pair.A <= S
        chosen.append((f"{label}A", w))
    F = F | VertexSet.of(w for w in torus.evens if degree_in(torus, w, S) >= threshold)
    # Dual: absorb the even neighborhoods of heavy vertices of A
    while (w := _first_eligible(torus, pair.A, torus.evens - F, threshold)) is not None:
        F = F | neighborhood(torus, VertexSet.of((w,)))
        chosen.append((f"{label}B", w))
    E = torus.evens - F
    S = S - VertexSet.of(w for w in torus.odds if degree_in(torus, w, E) >= threshold)
    return F, S, variant


def stage_refine(fs_star: ApproxPair, pair: GAPair, xi: float, psi: float) -> RefineResult:
    """Two refinement stages (thresholds xi then psi) scanning in ascending vertex order"""
    torus = pair.torus
    if not (fs_star.F <= pair.G and pair.A <= fs_star.S):
        raise PreconditionError("Refinement input must satisfy F ⊆ G and A ⊆ S")
    chosen: list[tuple[str, int]] = []
    F, S, first_variant = _refine_pass(torus, fs_star.F, fs_star.S, pair, xi, "1", chosen)
    stage1 = ApproxPair(torus=torus, F=F, S=S)
    missing, excess = len(pair.G - F), len(S - pair.A)
    if pair.t > 0:
        stage1_bounds = missing < 2 * pair.t and excess < 2 * pair.t
    else:
        stage1_bounds = missing == 0 and excess == 0
    F, S, second_variant = _refine_pass(torus, F, S, pair, psi, "2", chosen)
    result = ApproxPair(torus=torus, F=F, S=S)
    l = torus.degree
    high_degree = (
        all(degree_in(torus, v, result.F) > l - psi for v in result.S)
        and all(degree_in(torus, v, result.T) > l - psi for v in result.E)
    )
    return RefineResult(
        approx=result,
        chosen=tuple(chosen),
        stage1=stage1,
        stage1_bounds=stage1_bounds,
        contains=result.F <= pair.G and pair.A <= result.S,
        high_degree=high_degree,
        loop_variant=first_variant and second_variant,
    )


def resolve_params(torus: Torus, params: Optional[ApproxParams] = None) -> tuple[float, float]:
    """(ξ, ψ) with defaults l/2 and √d"""
    params = params or ApproxParams()
    xi = torus.degree / 2 if params.xi is None else params.xi
    psi = math.sqrt(torus.d) if params.psi is None else params.psi
    if not 0 < psi < torus.degree:
        raise PreconditionError(f"psi must lie in (0, {torus.degree}), got {psi}")
    return xi, psi


def pi(pair: GAPair, params: Optional[ApproxParams] = None) -> PiResult:
    """build_U, then the first approximation, then both refinement stages"""
    xi, psi = resolve_params(pair.torus, params)
    construction = build_U(pair)
    if not construction.covers_boundary:
        raise InvariantViolation(
            "N(U) misses part of G0' ∪ B0'",
            {"G_mask": pair.G.mask, "A_mask": pair.A.mask, "U_mask": construction.U.mask},
        )
    first = first_approximation(construction.U, pair)
    refined = stage_refine(first.approx, pair, xi, psi)
    return PiResult(construction=construction, first=first, refined=refined)


def pi_properties(result: PiResult) -> dict[str, bool]:
    return {
        "covers_boundary": result.construction.covers_boundary,
        "near_boundary": result.construction.near_boundary,
        "six_clustered": result.construction.six_clustered,
        "first_contains": result.first.contains,
        "stage1_bounds": result.refined.stage1_bounds,
        "contains": result.refined.contains,
        "high_degree": result.refined.high_degree,
        "loop_variant": result.refined.loop_variant,
    }


def approx_audit(pairs: Iterable[GAPair], params: Optional[ApproxParams] = None) -> tuple[ApproxAuditSummary, list[dict]]:
    """Run π over a family of pairs and collect per-pair records"""
    summary = ApproxAuditSummary()
    records = []
    for pair in pairs:
        result = pi(pair, params)
        properties = pi_properties(result) | split_properties(pair, result.construction.split)
        summary.audited += 1
        summary.outputs.add(result.approx.key)
        summary.max_t = max(summary.max_t, pair.t)
        if result.construction.degenerate_threshold or result.construction.cover_completed:
            summary.degeneracies += 1
        failed = [name for name, holds in properties.items() if not holds]
        if failed:
            summary.failures.append({"G_mask": pair.G.mask, "A_mask": pair.A.mask, "failed": failed})
        records.append({
            "g": pair.g,
            "a": pair.a,
            "t": pair.t,
            "U_size": len(result.construction.U),
            "U2_ratio": result.construction.u2_ratio,
            "FS_sizes": [len(result.approx.F), len(result.approx.S)],
            "App2_ok": result.refined.contains and result.refined.high_degree,
            "distinct_pi_outputs_running": summary.distinct_outputs,
            "degenerate_threshold": result.construction.degenerate_threshold,
            "cover_completed": result.construction.cover_completed,
            "properties": properties,
        })
    logger.info(
        "Approximated %d pairs: %d failures, %d distinct outputs, %d degenerate",
        summary.audited, len(summary.failures), summary.distinct_outputs, summary.degeneracies,
    )
    return summary, records


def ubd2_ratio(summary: ApproxAuditSummary, d: int) -> Optional[float]:
    """log |outputs| against t d^{-1/2} ln^{3/2} d (t the largest audited)"""
    scale = summary.max_t * d ** -0.5 * math.log(d) ** 1.5 if d > 1 else 0.0
    if scale <= 0 or not summary.outputs:
        return None
    return math.log(summary.distinct_outputs) / scale


# ========================================
# Legal covers
# ========================================

def _mask(nodes: Iterable[int]) -> int:
    return sum(1 << v for v in nodes)


def minimal_vertex_covers(graph: nx.Graph) -> list[frozenset]:
    """Complements of the maximal independent sets"""
    if graph.number_of_nodes() == 0:
        return [frozenset()]
    nodes = set(graph)
    return [frozenset(nodes - set(clique)) for clique in nx.find_cliques(nx.complement(graph))]


def _is_legal(graph: nx.Graph, K: set, L: set, U: set) -> bool:
    return K == _graph_neighborhood(graph, U - L)


def _hall_properties(graph: nx.Graph, K: set, L: set, U: set) -> tuple[bool, bool]:
    free = U - L
    property_a = all(
        len(_graph_neighborhood(graph, sub) & free) >= size
        for size in range(1, len(K) + 1)
        for sub in itertools.combinations(sorted(K), size)
    )
    property_b = all(
        len(_graph_neighborhood(graph, sub) - K) >= size
        for size in range(1, len(L) + 1)
        for sub in itertools.combinations(sorted(L), size)
    )
    return property_a, property_b


def legal_cover_search(graph: nx.Graph, P: Iterable[int], R: Iterable[int], U: Iterable[int]) -> LegalCover:
    """Legal cover minimizing |K ∪ L| (ties: smallest K mask, then L mask)"""
    P, R, U = set(P), set(R), set(U)
    require_cover_searchable(graph.number_of_nodes())
    if not U <= R:
        raise PreconditionError("U must be a subset of R")
    trivial_K = _graph_neighborhood(graph, U)
    trivial_M = (R - U) & _graph_neighborhood(graph, P - trivial_K)
    trivial = frozenset(trivial_K | trivial_M)
    covers = minimal_vertex_covers(graph)
    if trivial not in covers:
        raise InvariantViolation("The cover N(U) ∪ M is not a minimal cover", {"U": sorted(U)})
    best = None
    candidates = 0
    for cover in covers:
        K, L = set(cover & P), set(cover & U)
        if not _is_legal(graph, K, L, U):
            continue
        candidates += 1
        key = (len(K) + len(L), _mask(K), _mask(L))
        if best is None or key < best[0]:
            best = (key, K, L, set(cover & (R - U)))
    _, K, L, M = best
    property_a, property_b = _hall_properties(graph, K, L, U)
    return LegalCover(
        K=VertexSet.of(K),
        L=VertexSet.of(L),
        M=VertexSet.of(M),
        property_a=property_a,
        property_b=property_b,
        candidates=candidates,
    )


def cover_structure(pair: GAPair, approx: ApproxPair, J: VertexSet, j: Direction, search: bool = True) -> CoverStructure:
    """K = G ∩ E0, L = U \\ A, M = (S0 \\ U) \\ A for U = σ_j^{-1}(J) ∩ S0"""
    torus = pair.torus
    U = shift_set(torus, J, -j) & approx.S0
    K = pair.G & approx.E0
    L = U - pair.A
    M = (approx.S0 - U) - pair.A
    graph = induced_subgraph(torus, approx.Q)
    cover = set(K | L | M)
    is_cover = all(u in cover or v in cover for u, v in graph.edges)
    minimal = all(any(u not in cover for u in graph.adj[v]) for v in cover)
    k_is_neighborhood = set(K) == _graph_neighborhood(graph, set(U - L))
    exchange_bounds = k_recovered = None
    if search and graph.number_of_nodes() <= require_cover_searchable.limit:
        legal = legal_cover_search(graph, approx.E0, approx.S0, U)
        K_prime, L_prime = legal.K - K, legal.L - L
        exchange_bounds = (
            len(L) >= len(K_prime) + len(legal.L - L_prime)
            and len(K) >= len(L_prime) + len(legal.K - K_prime)
        )
        rebuilt = set(legal.K - K_prime) | (_graph_neighborhood(graph, set(L_prime)) & set(approx.E0))
        k_recovered = rebuilt == set(K)
    return CoverStructure(
        U=U,
        K=K,
        L=L,
        M=M,
        is_cover=is_cover,
        minimal=minimal,
        k_is_neighborhood=k_is_neighborhood,
        exchange_bounds=exchange_bounds,
        k_recovered=k_recovered,
    )
