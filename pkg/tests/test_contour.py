import pytest

from app.core.errors import PreconditionError
from app.modules.contour.schema import ContourAuditRecord
from app.modules.contour.service import (
    audit_trace,
    build_contour,
    contour_audit,
    dual_pair,
    enumerate_GA_pairs,
    enumerate_J0,
    ga_pair_from_A,
    ga_pair_of,
    in_J0,
    satisfies_ga3,
)
from app.modules.ensemble.service import enumerate_J
from app.modules.lattice.enums import Parity
from app.modules.lattice.models import VertexSet
from app.modules.lattice.service import neighbors, vertex_index


def test_J0_is_empty_on_the_smallest_torus(even4, torus4):
    assert list(enumerate_J0(even4, vertex_index(torus4, (1, 0)))) == []


def test_J0_needs_even_boundary(odd4, torus4):
    with pytest.raises(PreconditionError):
        list(enumerate_J0(odd4, vertex_index(torus4, (1, 0))))


def test_singleton_contour(singleton6, torus6, v0_6):
    assert singleton6.A == VertexSet.of([v0_6])
    assert singleton6.G == neighbors(torus6, v0_6)
    assert singleton6.G0 == singleton6.G
    assert (singleton6.g, singleton6.t) == (4, 3)
    assert all(audit_trace(singleton6).values())


def test_contour_needs_member_of_J0(torus6, even6, v0_6):
    assert not in_J0(torus6, even6.frozen, v0_6)
    with pytest.raises(PreconditionError):
        build_contour(torus6, even6.frozen, v0_6)


def test_pairs_and_duality(singleton6, torus6, v0_6):
    pair = ga_pair_of(singleton6)
    assert satisfies_ga3(pair)
    dual = dual_pair(pair)
    assert dual.inner is Parity.EVEN
    assert dual.t == pair.t == 3
    assert satisfies_ga3(dual)
    assert dual_pair(dual) == pair
    assert ga_pair_from_A(torus6, VertexSet.of([v0_6])) == pair


def test_open_set_is_not_a_pair(torus6, v0_6):
    # Every odd vertex but v0 already surrounds all of E, so the closure gains v0
    assert ga_pair_from_A(torus6, torus6.odds - VertexSet.of([v0_6])) is None


def test_enumerate_pairs_around_v0(torus6, v0_6):
    pairs = list(enumerate_GA_pairs(torus6, v0_6, 4, 3))
    assert len(pairs) == 1
    assert pairs[0].A == VertexSet.of([v0_6])
    assert list(enumerate_GA_pairs(torus6, v0_6, 4, 4)) == []
    with pytest.raises(PreconditionError):
        enumerate_GA_pairs(torus6, vertex_index(torus6, (0, 0)), 4, 3)


def test_audit_record(singleton6):
    record = ContourAuditRecord.from_trace(singleton6, audit_trace(singleton6))
    assert (record.g, record.a, record.t) == (4, 1, 3)
    assert record.properties["GA3"]


def test_audit_skips_nothing_on_empty_input(torus6, v0_6):
    summary, rows = contour_audit(torus6, [], v0_6)
    assert summary.audited == 0 and rows == [] and summary.ok
    assert summary.max_multiplicity == 0


@pytest.mark.slow
def test_exhaustive_contour_audit(torus6, even6, v0_6, J0_6):
    assert J0_6
    assert len(J0_6) < sum(1 for _ in enumerate_J(even6))
    summary, rows = contour_audit(torus6, J0_6, v0_6, even6.delta)
    assert summary.ok, summary.failures[:3]
    assert summary.audited == len(J0_6) == len(rows)
    assert all(trace.v0 in trace.A for trace, _ in rows)
    assert summary.distinct_pairs <= summary.audited
