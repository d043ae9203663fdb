from fractions import Fraction

import pytest

from app.core.errors import PreconditionError
from app.modules.approx.models import ApproxParams
from app.modules.approx.service import pi
from app.modules.contour.service import ga_pair_of
from app.modules.flow.enums import FlowKind
from app.modules.flow.models import FlowConstants, FlowPolicy
from app.modules.flow.schema import DefectRow, FlowAuditSummary, MainBoundRow
from app.modules.flow.service import (
    boundary_shift,
    choose_direction_large,
    choose_direction_small,
    cover_audit,
    defect_audit,
    flow_row,
    flow_rows,
    main_bound_check,
    nu_small,
    phi,
    recover,
    row_failures,
    shift_data,
    small_I_bound_check,
)
from app.modules.lattice.models import VertexSet
from app.modules.lattice.service import directions, vertex_index
from tests.conftest import ACTIVITIES


@pytest.mark.parametrize("activity", ACTIVITIES)
def test_flow_constants(activity):
    constants = FlowConstants.of(activity)
    assert constants.alpha * activity + constants.beta == 1
    assert constants.alpha == activity / (1 + activity) ** 2


def test_singleton_shift(singleton6, torus6):
    pair = ga_pair_of(singleton6)
    assert all(len(boundary_shift(pair, j)) == 3 for j in directions(2))
    assert choose_direction_small(pair) == 1
    data = shift_data(singleton6, 1)
    assert data.moved == VertexSet.of([vertex_index(torus6, (2, 0))])
    assert data.outside == singleton6.I - singleton6.W
    members = list(phi(data))
    assert len(members) == data.phi_size == 8
    assert len({J.mask for J in members}) == 8
    assert all(J in data and recover(J, 1, pair) == singleton6.I for J in members)


def test_nu_vanishes_outside_phi(singleton6):
    data = shift_data(singleton6, 1)
    assert nu_small(singleton6.I, data, singleton6.I, 2) == 0


@pytest.mark.parametrize("activity", ACTIVITIES)
@pytest.mark.parametrize("policy", [FlowPolicy(), FlowPolicy.forced_large()], ids=["small", "large"])
def test_singleton_row_is_a_probability(singleton6, activity, policy):
    row = flow_row(singleton6, activity, policy)
    assert row.row_sum == 1
    assert row_failures(row) == []


def test_small_row_kind_and_values(singleton6):
    row = flow_row(singleton6, Fraction(1), FlowPolicy())
    assert row.kind is FlowKind.SMALL and row.j == 1
    assert set(row.entries.values()) == {Fraction(1, 8)}
    assert small_I_bound_check([row], 1)


def test_large_row_carries_split(singleton6):
    row = flow_row(singleton6, 2, FlowPolicy.forced_large())
    assert row.kind is FlowKind.LARGE
    assert row.split is not None and row.partition_ok
    assert (row.split.C | row.split.D) == row.shift.G0j
    groups = main_bound_check([row], 2)
    assert groups and all(group.total > 0 for group in groups)
    assert MainBoundRow.from_group(groups[0]).t == 3


def test_large_direction_needs_positive_psi(singleton6):
    pair = ga_pair_of(singleton6)
    approx = pi(pair).approx
    with pytest.raises(PreconditionError):
        choose_direction_large(pair, approx, 0)


def test_no_rows_on_the_smallest_torus(even4, torus4):
    v0 = vertex_index(torus4, (1, 0))
    assert flow_rows(even4, 1, v0, FlowPolicy.forced_large()) == []
    report = defect_audit(even4, 1, v0, FlowPolicy())
    assert report.rows == 0 and report.max_defect == 0 and report.ok
    assert FlowAuditSummary.from_report(report).prob_J0 == "0"


def test_defect_audit_needs_positive_activity(even4, torus4):
    with pytest.raises(PreconditionError):
        defect_audit(even4, 0, vertex_index(torus4, (1, 0)), FlowPolicy())


def test_policies():
    policy = FlowPolicy(approx=ApproxParams(psi=1.0))
    assert FlowPolicy.forced_large().tau == 0
    assert policy.approx.psi == 1.0


@pytest.mark.slow
@pytest.mark.parametrize("activity", [Fraction(1), Fraction(2), Fraction(5)])
def test_exhaustive_defect_audit(even6, v0_6, activity):
    report = defect_audit(even6, activity, v0_6, FlowPolicy())
    assert report.ok, report.failures[:3]
    assert report.rows > 0
    assert report.prob_J0_direct <= report.max_defect
    rows = DefectRow.rows(report)
    assert len(rows) == len(report.defects)


@pytest.mark.slow
def test_exhaustive_large_rows(even6, v0_6):
    rows = flow_rows(even6, 2, v0_6, FlowPolicy.forced_large())
    assert rows and all(row.kind is FlowKind.LARGE for row in rows)
    assert all(row_failures(row) == [] for row in rows)
    report = defect_audit(even6, 2, v0_6, FlowPolicy.forced_large(), rows=rows)
    assert report.identity_holds and report.telescoping_holds and report.prob_J0_agrees
    checked, failures = cover_audit(rows, search=True)
    assert checked == sum(len(row.entries) for row in rows)
    assert failures == []
    assert all(group.total > 0 for group in main_bound_check(rows, 2))


@pytest.mark.slow
@pytest.mark.parametrize("activity", [Fraction(1), Fraction(2), Fraction(5)])
def test_exhaustive_small_only_audit(even6, v0_6, J0_6, torus6, activity):
    report = defect_audit(even6, activity, v0_6, FlowPolicy.small_only(torus6))
    assert report.ok, report.failures[:3]
    assert report.rows == report.small_rows == len(J0_6)
    assert report.large_rows == 0
    assert report.row_sums_ok and report.identity_holds
    if activity == 1:
        assert report.max_defect == Fraction(13, 32)
