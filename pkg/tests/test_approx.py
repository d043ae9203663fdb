import math

import networkx as nx
import pytest

from app.core.errors import PreconditionError
from app.modules.approx.models import ApproxAuditSummary, ApproxPair, ApproxParams
from app.modules.approx.service import (
    approx_audit,
    boundary_split,
    build_U,
    check_quad,
    cover_threshold,
    legal_cover_search,
    lovasz_stein_bound,
    lovasz_stein_cover,
    matching_certificate,
    pi,
    pi_properties,
    quad_holds,
    resolve_params,
    split_properties,
    stage_refine,
    ubd2_ratio,
)
from app.modules.contour.service import ga_pair_of
from app.modules.lattice.models import VertexSet
from app.modules.lattice.service import make_torus, vertex_index

# Properties every pair coming from a contour satisfies
GUARANTEED = (
    "covers_boundary",
    "near_boundary",
    "six_clustered",
    "first_contains",
    "stage1_bounds",
    "contains",
    "high_degree",
    "loop_variant",
    "GOBO",
    "sep",
)


@pytest.fixture
def pair6(singleton6):
    return ga_pair_of(singleton6)


def test_cover_threshold(torus6):
    assert cover_threshold(torus6) == 2
    assert cover_threshold(make_torus(3, 2)) == 3


def test_quad_on_the_torus(torus6):
    assert check_quad(torus6)
    assert quad_holds(nx.grid_2d_graph(6, 6, periodic=True))
    assert not quad_holds(nx.path_graph(3))


def test_matching_certificate(torus6):
    v = vertex_index(torus6, (0, 0))
    for w in torus6.neighbors[v]:
        assert matching_certificate(torus6, v, w)


def test_lovasz_stein_examples():
    complete = nx.complete_bipartite_graph(3, 3)
    assert len(lovasz_stein_cover(complete, range(3), range(3, 6), 3, 3)) == 1
    matching = nx.Graph((i, i + 5) for i in range(5))
    assert lovasz_stein_cover(matching, range(5), range(5, 10), 1, 1) == set(range(5, 10))
    with pytest.raises(PreconditionError):
        lovasz_stein_cover(matching, range(5), range(5, 10), 2, 1)
    with pytest.raises(PreconditionError):
        lovasz_stein_cover(complete, range(3), range(3, 6), 3, 2)


@pytest.mark.parametrize("seed", range(100))
def test_lovasz_stein_on_random_bigraphs(seed):
    graph = nx.bipartite.random_graph(8, 10, 0.35, seed=seed)
    Y = set(range(8, 18))
    X = {x for x in range(8) if graph.degree(x) > 0}
    if not X:
        return
    a = min(graph.degree(x) for x in X)
    b = max(len(X & set(graph.adj[y])) for y in Y)
    chosen = lovasz_stein_cover(graph, X, Y, a, b)
    assert chosen <= Y
    assert all(X & set(graph.adj[y]) for y in chosen)
    assert X <= {x for y in chosen for x in graph.adj[y]}
    assert len(chosen) <= lovasz_stein_bound(len(Y), a, b)


def test_legal_cover_on_a_star():
    graph = nx.Graph([(0, 1), (0, 2)])
    legal = legal_cover_search(graph, P=[0], R=[1, 2], U=[1])
    assert (sorted(legal.K), sorted(legal.L), sorted(legal.M)) == ([], [1], [2])
    assert legal.property_a and legal.property_b
    assert legal.candidates == 2


def test_legal_cover_needs_U_inside_R():
    with pytest.raises(PreconditionError):
        legal_cover_search(nx.Graph([(0, 1)]), P=[0], R=[1], U=[0])


@pytest.mark.parametrize("seed", range(100))
def test_legal_cover_on_random_bigraphs(seed):
    graph = nx.bipartite.random_graph(5, 6, 0.4, seed=seed)
    P, R = set(range(5)), set(range(5, 11))
    U = {r for r in R if r % 2 == seed % 2}
    legal = legal_cover_search(graph, P, R, U)
    K, L, M = set(legal.K), set(legal.L), set(legal.M)
    assert K == {p for u in U - L for p in graph.adj[u]}
    assert all(u in K | L | M or v in K | L | M for u, v in graph.edges)
    assert len(K) + len(L) <= len({p for u in U for p in graph.adj[u]})
    assert legal.property_a and legal.property_b


def test_boundary_split_of_singleton(pair6):
    split = boundary_split(pair6)
    # Each vertex of G has exactly one neighbor in A = {v0}
    assert split.G0_prime == pair6.G
    assert all(split_properties(pair6, split).values())


def test_build_U_on_singleton(pair6):
    construction = build_U(pair6)
    assert construction.threshold == 2
    assert construction.degenerate_threshold
    assert construction.covers_boundary and construction.near_boundary
    assert construction.u2_ratio is not None and construction.u2_ratio > 0


def test_pi_on_singleton(pair6):
    result = pi(pair6)
    properties = pi_properties(result)
    assert set(properties) <= set(GUARANTEED)
    assert all(properties.values()), properties
    assert result.approx.F <= pair6.G and pair6.A <= result.approx.S


def test_stage_refine_needs_containment(pair6, torus6):
    outside = ApproxPair(torus=torus6, F=torus6.evens, S=VertexSet())
    with pytest.raises(PreconditionError):
        stage_refine(outside, pair6, 2.0, 1.5)


def test_resolve_params(torus6):
    assert resolve_params(torus6) == (2.0, math.sqrt(2))
    assert resolve_params(torus6, ApproxParams(xi=3.0, psi=1.0)) == (3.0, 1.0)
    for psi in (0.0, 4.0):
        with pytest.raises(PreconditionError):
            resolve_params(torus6, ApproxParams(psi=psi))


def test_ubd2_ratio():
    assert ubd2_ratio(ApproxAuditSummary(), 2) is None
    summary = ApproxAuditSummary(audited=2, outputs={(1, 2), (3, 4)}, max_t=3)
    expected = math.log(2) / (3 * 2 ** -0.5 * math.log(2) ** 1.5)
    assert ubd2_ratio(summary, 2) == pytest.approx(expected)
    assert ubd2_ratio(summary, 1) is None


def test_audit_records(pair6):
    summary, records = approx_audit([pair6])
    assert summary.audited == 1 and summary.distinct_outputs == 1
    assert summary.degeneracies == 1
    record = records[0]
    assert record["U_size"] > 0 and record["App2_ok"]
    assert record["distinct_pi_outputs_running"] == 1


@pytest.mark.slow
def test_audit_over_contour_pairs(traces6):
    pairs = {(trace.G.mask, trace.A.mask): ga_pair_of(trace) for trace in traces6}
    summary, records = approx_audit(pairs.values())
    assert summary.audited == len(pairs)
    assert summary.distinct_outputs <= summary.audited
    assert summary.failures == []
    for record in records:
        properties = record["properties"]
        assert set(properties) == set(GUARANTEED)
        assert all(properties.values()), properties
