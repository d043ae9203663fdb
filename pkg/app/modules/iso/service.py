import logging
import math
from collections import Counter
from fractions import Fraction
from typing import Iterator, Optional

import networkx as nx
import numpy as np

from app.core.budgets import require_tree_countable
from app.core.errors import PreconditionError, require
from app.modules.contour.models import ContourTrace
from app.modules.lattice.service import external_boundary
from .models import (
    BallCounts,
    DeltaLowerReport,
    Goal1Point,
    TqBoundReport,
    TreeCountReport,
)

logger = logging.getLogger(__name__)

Point = tuple[int, ...]


# ========================================
# Spheres and balls of Z^d
# ========================================

def sphere_stratum(d: int, q: int, t: int) -> int:
    """s(q, t) = 2^t C(d, t) C(q-1, t-1)"""
    if q == 0:
        return 1 if t == 0 else 0
    if t == 0:
        return 0
    return 2 ** t * math.comb(d, t) * math.comb(q - 1, t - 1)


def sphere_size(d: int, q: int) -> int:
    return sum(sphere_stratum(d, q, t) for t in range(min(q, d) + 1))


def ball_stratum(d: int, r: int, t: int) -> int:
    """b(r, t) = 2^t C(d, t) C(r, t)"""
    return 2 ** t * math.comb(d, t) * math.comb(r, t)


def ball_size(d: int, r: int) -> int:
    return sum(ball_stratum(d, r, t) for t in range(min(r, d) + 1))


def average_support(d: int, q: int) -> Fraction:
    """t(q): mean number of nonzero coordinates over S(q)"""
    total = sum(t * sphere_stratum(d, q, t) for t in range(min(q, d) + 1))
    return Fraction(total, sphere_size(d, q))


def sphere_points(d: int, q: int) -> Iterator[Point]:
    """Every x in Z^d with |x|_1 = q"""
    if d == 1:
        yield from ((q,), (-q,)) if q else ((0,),)
        return
    for x in range(-q, q + 1):
        for rest in sphere_points(d - 1, q - abs(x)):
            yield (x, *rest)


def lattice_sphere(d: int, q: int) -> Counter:
    """Support-size histogram of S(q) by direct enumeration"""
    return Counter(sum(1 for x in point if x) for point in sphere_points(d, q))


def ball_counts(d: int, r_max: int) -> BallCounts:
    if d < 1 or r_max < 0:
        raise PreconditionError(f"Need d >= 1 and r_max >= 0, got d={d} r_max={r_max}")
    width = min(r_max, d) + 1
    s_strata = tuple(tuple(sphere_stratum(d, q, t) for t in range(width)) for q in range(r_max + 1))
    b_strata = tuple(tuple(ball_stratum(d, r, t) for t in range(width)) for r in range(r_max + 1))
    s = tuple(sum(row) for row in s_strata)
    b = tuple(sum(row) for row in b_strata)
    for r in range(r_max + 1):
        require(b[r] == sum(s[: r + 1]), "Ball is not the union of its spheres", d=d, r=r)
    if d <= 5:
        for q in range(min(r_max, 8) + 1):
            direct = lattice_sphere(d, q)
            require(
                all(direct.get(t, 0) == s_strata[q][t] for t in range(width)) and sum(direct.values()) == s[q],
                "Stratified sphere count disagrees with lattice enumeration",
                d=d,
                q=q,
            )
    return BallCounts(
        d=d,
        r_max=r_max,
        s=s,
        b=b,
        s_strata=s_strata,
        b_strata=b_strata,
        support=tuple(average_support(d, q) for q in range(r_max + 1)),
    )


def f_ratio(q: int, t: int, d: int) -> Fraction:
    """s(q, t+1) / s(q, t) = 2 (d-t)(q-t) / ((t+1) t)"""
    if not 1 <= t < min(q, d):
        raise PreconditionError(f"f(q, t) needs 1 <= t < min(q, d), got q={q} t={t} d={d}")
    counted = Fraction(sphere_stratum(d, q, t + 1), sphere_stratum(d, q, t))
    formula = Fraction(2 * (d - t) * (q - t), (t + 1) * t)
    require(counted == formula, "Stratum ratio disagrees with its closed form", q=q, t=t, d=d)
    return formula


def qratio_holds(d: int, q: int) -> bool:
    """s(q)/s(q+1) ≤ min(q+1, d) / (2d - t(q))"""
    left = Fraction(sphere_size(d, q), sphere_size(d, q + 1))
    return left <= Fraction(min(q + 1, d)) / (2 * d - average_support(d, q))


def neighbor_pair_count(d: int, q: int) -> int:
    """|{(x, y) ∈ S(q) × S(q+1) : x ~ y}| by walking every edge out of S(q)"""
    count = 0
    for point in sphere_points(d, q):
        for i in range(d):
            for step in (1, -1):
                moved = point[i] + step
                if sum(map(abs, point)) - abs(point[i]) + abs(moved) == q + 1:
                    count += 1
    return count


def goal1_ratios(d: int, r_max: int) -> list[Goal1Point]:
    exponent = 1 - 1 / d
    points = []
    for r in range(r_max + 1):
        b = ball_size(d, r)
        s = sphere_size(d, r)
        scale = float(b) ** exponent
        points.append(Goal1Point(r=r, b=b, s=s, goal1_ratio=s / scale, bl_ratio=sphere_size(d, r + 1) / scale))
    return points


# ========================================
# Vertex isoperimetry
# ========================================

def bl_lower_bound(size: int, d: int) -> int:
    """⌈(1-α) s(r+1) + α s(r+2)⌉ where size = b(r) + α s(r+1), 0 ≤ α < 1"""
    if size < 1:
        raise PreconditionError(f"Size must be positive, got {size}")
    r = 0
    while ball_size(d, r + 1) <= size:
        r += 1
    alpha = Fraction(size - ball_size(d, r), sphere_size(d, r + 1))
    return math.ceil((1 - alpha) * sphere_size(d, r + 1) + alpha * sphere_size(d, r + 2))


def vertex_boundary_zd(C: set[Point], d: int) -> set[Point]:
    """Outer vertex boundary of a finite C ⊂ Z^d"""
    boundary = set()
    for point in C:
        for i in range(d):
            for step in (1, -1):
                y = point[:i] + (point[i] + step,) + point[i + 1:]
                if y not in C:
                    boundary.add(y)
    return boundary


def random_connected_set(d: int, size: int, rng: np.random.Generator) -> set[Point]:
    """Connected set grown from the origin by adding uniformly chosen boundary points"""
    if size < 1:
        raise PreconditionError(f"Size must be positive, got {size}")
    C = {(0,) * d}
    while len(C) < size:
        candidates = sorted(vertex_boundary_zd(C, d))
        C.add(candidates[int(rng.integers(len(candidates)))])
    return C


def lattice_ball(d: int, r: int) -> set[Point]:
    return {point for q in range(r + 1) for point in sphere_points(d, q)}


def delta_lower_check(trace: ContourTrace) -> DeltaLowerReport:
    """Check the instance-level steps behind the lower bound on δ = t/g"""
    torus, G, A, G0 = trace.torus, trace.G, trace.A, trace.G0
    if not (G | A).isdisjoint(trace.delta_layer):
        raise PreconditionError("Contour meets the boundary layer")
    d, g, t = torus.d, trace.g, trace.t
    delta = Fraction(t, g)
    inner = (G - G0) | A
    boundary = external_boundary(torus, inner)
    applicable = len(G0) <= len(A)
    bound = bl_lower_bound(len(inner), d) if applicable else None
    return DeltaLowerReport(
        g=g,
        t=t,
        g0=len(G0),
        delta=delta,
        g0_within_gradient=len(G0) <= t * torus.degree,
        g0_within_half_gradient=len(G0) <= t * d,
        boundary_identity=boundary == G0,
        bl_applicable=applicable,
        bl_bound=bound,
        bl_holds=bound is None or len(boundary) >= bound,
        ratio=float(delta) * d * g ** (1 / d),
    )


# ========================================
# Connected subgraph counts
# ========================================

def _count_extensions(adj: list[set[int]], current: set[int], extension: set[int], banned: set[int], n: int) -> int:
    if len(current) == n:
        return 1
    if not extension:
        return 0
    v = min(extension)
    rest = extension - {v}
    grown = current | {v}
    taken = _count_extensions(adj, grown, rest | (adj[v] - grown - banned), banned, n)
    return taken + _count_extensions(adj, current, rest, banned | {v}, n)


def count_connected_induced(graph: nx.Graph, x0, n: int, limit: Optional[int] = None) -> int:
    """Connected induced subgraphs of order n containing x0

    Each set is reached once: a candidate vertex is either taken or banned for
    the rest of the branch.
    """
    require_tree_countable(graph.number_of_nodes(), limit)
    if x0 not in graph:
        raise PreconditionError(f"{x0!r} is not a vertex of the graph")
    if n < 1:
        raise PreconditionError(f"Order must be positive, got {n}")
    index = {v: i for i, v in enumerate(graph.nodes)}
    adj = [{index[w] for w in graph.neighbors(v)} for v in graph.nodes]
    root = index[x0]
    return _count_extensions(adj, {root}, set(adj[root]), {root}, n)


def tree_count_check(graph: nx.Graph, x0, n: int, limit: Optional[int] = None) -> TreeCountReport:
    """Count against (eD)^n, D the maximum degree"""
    D = max((degree for _, degree in graph.degree), default=0)
    count = count_connected_induced(graph, x0, n, limit)
    report = TreeCountReport(n=n, max_degree=D, count=count, bound=(math.e * D) ** n)
    logger.debug("n=%d: %d connected sets (bound %.1f)", n, count, report.bound)
    return report


def rooted_subtree_count(D: int, n: int) -> int:
    """Rooted subtrees of order n in the infinite D-branching tree: C(Dn, n) / ((D-1)n + 1)"""
    if D < 1 or n < 1:
        raise PreconditionError(f"Need D >= 1 and n >= 1, got D={D} n={n}")
    count, remainder = divmod(math.comb(D * n, n), (D - 1) * n + 1)
    require(remainder == 0, "Subtree count is not an integer", D=D, n=n)
    return count


def branching_tree(D: int, n: int) -> nx.Graph:
    """D-branching tree deep enough to hold every rooted subtree of order n (root 0)"""
    return nx.balanced_tree(D, max(n - 1, 0))


# ========================================
# Average support
# ========================================

def tq_bound_check(d: int, q: int) -> TqBoundReport:
    """t(q) < (1 - 1/(20β)) d for q = βd, β > 0.9, and f(q, t) < 1/2 once t ≥ ⌈(1 - 1/(4β)) d⌉"""
    if d < 1 or q < 1:
        raise PreconditionError(f"Need d >= 1 and q >= 1, got d={d} q={q}")
    beta = Fraction(q, d)
    if beta <= Fraction(9, 10):
        raise PreconditionError(f"q/d = {beta} must exceed 0.9")
    t0 = math.ceil((1 - 1 / (4 * beta)) * d)
    report = TqBoundReport(
        d=d,
        q=q,
        beta=beta,
        t0=t0,
        support=average_support(d, q),
        support_bound=(1 - 1 / (20 * beta)) * d,
        f_values={t: f_ratio(q, t, d) for t in range(max(t0, 1), min(q, d))},
    )
    logger.info("t(%d) = %.4f against %.4f at d=%d", q, float(report.support), float(report.support_bound), d)
    return report
