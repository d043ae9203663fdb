import dataclasses
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from app.core.errors import BudgetExceededError, PreconditionError
from app.modules.iso.schema import BallRow, SphereStratumRow
from app.modules.iso.service import (
    average_support,
    ball_counts,
    ball_size,
    bl_lower_bound,
    branching_tree,
    count_connected_induced,
    delta_lower_check,
    f_ratio,
    goal1_ratios,
    lattice_ball,
    lattice_sphere,
    neighbor_pair_count,
    qratio_holds,
    random_connected_set,
    rooted_subtree_count,
    sphere_size,
    sphere_stratum,
    tq_bound_check,
    tree_count_check,
    vertex_boundary_zd,
)
from app.modules.contour.service import build_contour
from app.modules.lattice.service import ball, delta_set, induced_subgraph, make_torus, vertex_index


def test_plane_counts():
    assert [sphere_size(2, q) for q in range(5)] == [1, 4, 8, 12, 16]
    assert [ball_size(2, r) for r in range(5)] == [2 * r * r + 2 * r + 1 for r in range(5)]
    assert sphere_stratum(2, 0, 0) == 1 and sphere_stratum(2, 3, 0) == 0
    assert average_support(2, 0) == 0
    assert average_support(2, 3) == Fraction(5, 3)


def test_strata_match_enumeration():
    for d in range(1, 6):
        for q in range(9):
            direct = lattice_sphere(d, q)
            assert sum(direct.values()) == sphere_size(d, q)
            assert all(direct[t] == sphere_stratum(d, q, t) for t in direct)


def test_ball_counts_table():
    counts = ball_counts(3, 6)
    assert counts.b == tuple(ball_size(3, r) for r in range(7))
    assert counts.s[2] == sphere_size(3, 2) == 18
    assert counts.support[0] == 0
    rows = SphereStratumRow.rows(counts)
    assert len(rows) == 7 * 4
    assert sum(row.s_qt for row in rows if row.q == 2) == 18
    with pytest.raises(PreconditionError):
        ball_counts(0, 3)


def test_f_ratio():
    for d in range(1, 6):
        for q in range(2, 9):
            for t in range(1, min(q, d)):
                assert f_ratio(q, t, d) == Fraction(sphere_stratum(d, q, t + 1), sphere_stratum(d, q, t))
    assert f_ratio(5, 1, 3) == Fraction(2 * 2 * 4, 2)
    for q, t, d in [(3, 0, 2), (5, 2, 2), (2, 2, 5)]:
        with pytest.raises(PreconditionError):
            f_ratio(q, t, d)


@pytest.mark.parametrize("d", range(2, 6))
def test_sphere_growth(d):
    for q in range(9):
        assert qratio_holds(d, q)


@pytest.mark.parametrize("d", range(1, 5))
def test_neighbor_pairs(d):
    for q in range(6):
        expected = sphere_size(d, q) * (2 * d - average_support(d, q))
        assert neighbor_pair_count(d, q) == expected


def test_ball_boundary_meets_lower_bound():
    for d in (2, 3):
        for r in range(4):
            ball = lattice_ball(d, r)
            assert len(ball) == ball_size(d, r)
            assert len(vertex_boundary_zd(ball, d)) == bl_lower_bound(len(ball), d) == sphere_size(d, r + 1)
    with pytest.raises(PreconditionError):
        bl_lower_bound(0, 2)


def test_goal1_rows():
    points = goal1_ratios(2, 4)
    assert [point.s for point in points] == [sphere_size(2, r) for r in range(5)]
    assert points[0].goal1_ratio == 1.0
    row = BallRow.from_point(2, points[2])
    assert (row.b_r, row.s_r) == (13, 8)


def test_delta_lower_on_singleton(singleton6):
    report = delta_lower_check(singleton6)
    assert report.boundary_identity
    assert report.g0_within_gradient
    assert not report.bl_applicable and report.bl_holds
    assert report.ok
    assert report.delta == Fraction(3, 4)


def test_delta_lower_rejects_layer(singleton6):
    trace = dataclasses.replace(singleton6, delta_layer=singleton6.G)
    with pytest.raises(PreconditionError):
        delta_lower_check(trace)


@pytest.fixture(scope="module")
def diamond():
    """Contour of the odd vertices within distance 4 of (1, 0) on the 14x14 torus"""
    torus = make_torus(2, 7)
    v0 = vertex_index(torus, (1, 0))
    I = (delta_set(torus) & torus.evens) | (ball(torus, v0, 4) & torus.odds)
    return build_contour(torus, I, v0)


def test_delta_lower_on_a_large_contour(diamond):
    # W is the ball of radius 5 and G0 its outer sphere
    assert (diamond.g, diamond.a, len(diamond.G0)) == (36, 25, 20)
    report = delta_lower_check(diamond)
    assert report.bl_applicable
    assert report.bl_bound == bl_lower_bound(41, 2) == 20
    assert report.bl_holds and report.boundary_identity
    assert report.g0_within_half_gradient
    assert report.ok
    assert report.delta == Fraction(11, 36)


@pytest.mark.slow
def test_delta_lower_over_contours(traces6):
    reports = [delta_lower_check(trace) for trace in traces6]
    assert all(report.ok for report in reports)
    assert all(report.bl_holds for report in reports if report.bl_applicable)


@pytest.mark.parametrize(("D", "n", "expected"), [(2, 2, 2), (3, 2, 3), (2, 3, 5), (3, 5, 273)])
def test_rooted_subtree_formula(D, n, expected):
    assert rooted_subtree_count(D, n) == expected


@pytest.mark.parametrize("D", [1, 2, 3])
@pytest.mark.parametrize("n", range(1, 6))
def test_rooted_subtrees_by_direct_count(D, n):
    expected = rooted_subtree_count(D, n)
    tree = branching_tree(D, n)
    assert count_connected_induced(tree, 0, n, limit=tree.number_of_nodes()) == expected


def test_tree_count_budget():
    tree = branching_tree(3, 5)
    with pytest.raises(BudgetExceededError):
        count_connected_induced(tree, 0, 5)


def test_tree_count_preconditions():
    graph = nx.path_graph(4)
    with pytest.raises(PreconditionError):
        count_connected_induced(graph, 9, 2)
    with pytest.raises(PreconditionError):
        count_connected_induced(graph, 0, 0)
    with pytest.raises(PreconditionError):
        rooted_subtree_count(0, 3)


def test_tree_count_bounds(torus4):
    petersen = nx.petersen_graph()
    assert [count_connected_induced(petersen, 0, n) for n in (1, 2, 3)] == [1, 3, 9]
    grid = induced_subgraph(torus4, torus4.vertices)
    origin = vertex_index(torus4, (0, 0))
    assert count_connected_induced(grid, origin, 2) == 4
    for graph, x0 in ((petersen, 0), (grid, origin)):
        for n in range(1, 7):
            assert tree_count_check(graph, x0, n).holds


@pytest.mark.parametrize(("d", "q"), [(20, 19), (10, 100), (30, 28)])
def test_average_support_bound(d, q):
    report = tq_bound_check(d, q)
    assert report.ok


def test_average_support_needs_large_ratio():
    with pytest.raises(PreconditionError):
        tq_bound_check(10, 5)


@pytest.mark.slow
def test_random_sets_respect_lower_bound():
    rng = np.random.default_rng(12345)
    for size in rng.integers(1, 65, size=1000):
        C = random_connected_set(3, int(size), rng)
        assert len(C) == size
        assert len(vertex_boundary_zd(C, 3)) >= bl_lower_bound(int(size), 3)
