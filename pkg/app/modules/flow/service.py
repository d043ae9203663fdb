import itertools
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from app.core.errors import NoAdmissibleDirection, PreconditionError, require
from app.modules.approx.models import ApproxPair
from app.modules.approx.service import cover_structure, pi, resolve_params
from app.modules.contour.models import ContourTrace, GAPair
from app.modules.contour.service import build_contour, enumerate_J0, ga_pair_of
from app.modules.ensemble.models import Activity, Ensemble
from app.modules.ensemble.service import enumerate_J, exact_measure, prob_J0, weight
from app.modules.lattice.models import Direction, Occupancy, VertexSet
from app.modules.lattice.service import directions, is_independent, shift_set
from .enums import FlowKind
from .models import (
    DefectReport,
    FlowConstants,
    FlowPolicy,
    FlowRow,
    LargeFlowSplit,
    MainBoundGroup,
    ShiftData,
)

logger = logging.getLogger(__name__)


# ========================================
# Shifts and φ_j
# ========================================

def boundary_shift(pair: GAPair, j: Direction) -> VertexSet:
    """G0^j = G0 ∩ σ_j(O \\ A)"""
    torus = pair.torus
    return pair.G0 & shift_set(torus, torus.odds - pair.A, j)


def shift_data(trace: ContourTrace, j: Direction) -> ShiftData:
    torus = trace.torus
    G0j = boundary_shift(ga_pair_of(trace), j)
    outside = trace.I - trace.W
    moved = shift_set(torus, trace.I & trace.W, j)
    disjoint = outside.isdisjoint(moved) and outside.isdisjoint(G0j) and moved.isdisjoint(G0j)
    require(
        disjoint and is_independent(torus, outside | moved | G0j),
        "Shifted configuration is not a disjoint independent union",
        I_mask=trace.I.mask,
        j=j,
    )
    return ShiftData(j=j, G0j=G0j, outside=outside, moved=moved)


def phi(data: ShiftData) -> Iterator[Occupancy]:
    """Every J with σ_j*(I) ⊆ J ⊆ σ_j*(I) ∪ G0^j"""
    base = data.base
    extra = list(data.G0j)
    for size in range(len(extra) + 1):
        for added in itertools.combinations(extra, size):
            yield base | VertexSet.of(added)


def recover(J: Occupancy, j: Direction, pair: GAPair) -> Occupancy:
    """(J \\ W) ∪ σ_j^{-1}(J ∩ (W \\ G0^j))"""
    inside = J & (pair.W - boundary_shift(pair, j))
    return (J - pair.W) | shift_set(pair.torus, inside, -j)


# ========================================
# Directions
# ========================================

def choose_direction_small(pair: GAPair) -> Direction:
    """j maximizing |G0^j|; ties to the smallest |j|, positive first"""
    sizes = {j: len(boundary_shift(pair, j)) for j in directions(pair.torus.d)}
    best = max(sizes.values())
    j = next(j for j, size in sizes.items() if size == best)
    require(sizes[j] >= pair.t, "Largest shifted boundary smaller than t", G_mask=pair.G.mask, j=j)
    return j


def shifted_overlap(pair: GAPair, approx: ApproxPair, j: Direction) -> int:
    """|σ_j(S0) ∩ E0|"""
    return len(shift_set(pair.torus, approx.S0, j) & approx.E0)


def choose_direction_large(pair: GAPair, approx: ApproxPair, psi: float) -> Direction:
    """First j with |G0^j| > 0.8 t and |σ_j(S0) ∩ E0| < 10 |G0^j| ψ / l"""
    if psi <= 0:
        raise PreconditionError(f"psi must be positive, got {psi}")
    l = pair.torus.degree
    for j in directions(pair.torus.d):
        size = len(boundary_shift(pair, j))
        if 5 * size > 4 * pair.t and shifted_overlap(pair, approx, j) < 10 * size * psi / l:
            return j
    raise NoAdmissibleDirection(f"No direction passes both rules (g={pair.g}, t={pair.t})")


def large_split(pair: GAPair, approx: ApproxPair, j: Direction) -> LargeFlowSplit:
    """C = G0^j ∩ F ∩ σ_j(S0) and D = G0^j ∩ (σ_j(T) ∪ (σ_j(S0) ∩ E0))"""
    torus = pair.torus
    G0j = boundary_shift(pair, j)
    moved_S0 = shift_set(torus, approx.S0, j)
    C = G0j & approx.F & moved_S0
    D = G0j & (shift_set(torus, approx.T, j) | (moved_S0 & approx.E0))
    return LargeFlowSplit(j=j, C=C, D=D)


def is_partition(split: LargeFlowSplit, G0j: VertexSet) -> bool:
    return split.C.isdisjoint(split.D) and (split.C | split.D) == G0j


# ========================================
# The flow ν
# ========================================

def nu_small(I: Occupancy, data: ShiftData, J: Occupancy, activity: Activity) -> Fraction:
    """λ^{|J|-|I|} (1+λ)^{-|G0^j|} on φ_j(I), 0 elsewhere"""
    if J not in data:
        return Fraction(0)
    activity = Fraction(activity)
    return activity ** (len(J) - len(I)) / (1 + activity) ** len(data.G0j)


def nu_large(I: Occupancy, data: ShiftData, split: LargeFlowSplit, J: Occupancy, activity: Activity) -> Fraction:
    """(αλ)^{|C∩J|} β^{|C\\J|} (λ/(1+λ))^{|D∩J|} (1+λ)^{-|D\\J|} on φ_j(I), 0 elsewhere"""
    if J not in data:
        return Fraction(0)
    constants = FlowConstants.of(activity)
    lam = constants.activity
    C, D = split.C, split.D
    return (
        (constants.alpha * lam) ** len(C & J)
        * constants.beta ** len(C - J)
        * (lam / (1 + lam)) ** len(D & J)
        / (1 + lam) ** len(D - J)
    )


def flow_row(trace: ContourTrace, activity: Activity, policy: FlowPolicy) -> FlowRow:
    """ν(I, ·) for the I of the trace, with the direction and flow form the policy selects"""
    activity = Fraction(activity)
    torus = trace.torus
    pair = ga_pair_of(trace)
    I = trace.I
    if pair.g <= policy.threshold(torus):
        j = choose_direction_small(pair)
        data = shift_data(trace, j)
        entries = {J.mask: nu_small(I, data, J, activity) for J in phi(data)}
        return FlowRow(I=I, kind=FlowKind.SMALL, j=j, trace=trace, pair=pair, shift=data, entries=entries)
    _, psi = resolve_params(torus, policy.approx)
    approx = pi(pair, policy.approx).approx
    failed = False
    try:
        j = choose_direction_large(pair, approx, psi)
    except NoAdmissibleDirection as exc:
        logger.debug("%s; falling back to the largest shifted boundary", exc.detail)
        j = choose_direction_small(pair)
        failed = True
    data = shift_data(trace, j)
    split = large_split(pair, approx, j)
    entries = {J.mask: nu_large(I, data, split, J, activity) for J in phi(data)}
    return FlowRow(
        I=I,
        kind=FlowKind.LARGE,
        j=j,
        trace=trace,
        pair=pair,
        shift=data,
        entries=entries,
        approx=approx,
        split=split,
        direction_failed=failed,
        partition_ok=is_partition(split, data.G0j),
    )


def row_failures(row: FlowRow) -> list[str]:
    """Names of the row properties that fail"""
    failed = []
    if row.row_sum != 1:
        failed.append("row_sum")
    if len(row.entries) != row.shift.phi_size:
        failed.append("phi_size")
    if any(value < 0 for value in row.entries.values()):
        failed.append("nonnegative")
    if not row.partition_ok:
        failed.append("partition")
    for mask in row.entries:
        if recover(VertexSet(mask), row.j, row.pair) != row.I:
            failed.append("recover")
            break
    return failed


# ========================================
# Audits
# ========================================

def _rows_for(task: tuple[Ensemble, int, Fraction, FlowPolicy, Sequence[int]]) -> list[FlowRow]:
    e, v0, activity, policy, masks = task
    return [
        flow_row(build_contour(e.torus, VertexSet(mask), v0, e.delta), activity, policy)
        for mask in masks
    ]


def flow_rows(
    e: Ensemble,
    activity: Activity,
    v0: int,
    policy: FlowPolicy,
    workers: int = 1,
) -> list[FlowRow]:
    """One kernel row per member of J0, in ascending mask order"""
    activity = Fraction(activity)
    masks = [I.mask for I in enumerate_J0(e, v0)]
    if workers <= 1 or len(masks) < 2:
        return _rows_for((e, v0, activity, policy, masks))
    chunks = [masks[k::workers] for k in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        rows = [row for part in pool.map(_rows_for, [(e, v0, activity, policy, c) for c in chunks]) for row in part]
    return sorted(rows, key=lambda row: row.I.mask)


def defect_audit(
    e: Ensemble,
    activity: Activity,
    v0: int,
    policy: FlowPolicy,
    workers: int = 1,
    rows: Optional[list[FlowRow]] = None,
) -> DefectReport:
    """Exact Σ_{I in J0} w(I)/w(J) ν(I, J) for every J in J, and the chain of bounds it implies"""
    activity = Fraction(activity)
    if activity <= 0:
        raise PreconditionError("The defect audit needs a positive activity")
    if rows is None:
        rows = flow_rows(e, activity, v0, policy, workers)
    measure = exact_measure(e, activity)
    defects: dict[int, Fraction] = defaultdict(Fraction)
    best_term: dict[int, Fraction] = {}
    argmax: dict[int, int] = {}
    failures = []
    weight_J0 = Fraction(0)
    for row in rows:
        failed = row_failures(row)
        if failed:
            failures.append({"I_mask": row.I.mask, "j": row.j, "failed": failed})
        w_I = weight(measure, row.I)
        weight_J0 += w_I
        for mask, value in row.entries.items():
            term = w_I / activity ** VertexSet(mask).size * value
            defects[mask] += term
            if mask not in best_term or term > best_term[mask]:
                best_term[mask] = term
                argmax[mask] = row.I.mask
    weight_J = Fraction(0)
    weighted_defects = Fraction(0)
    for J in enumerate_J(e):
        w_J = weight(measure, J)
        weight_J += w_J
        weighted_defects += w_J * defects.get(J.mask, Fraction(0))
    max_defect = max(defects.values(), default=Fraction(0))
    report = DefectReport(
        activity=activity,
        rows=len(rows),
        row_sums_ok=all(row.row_sum == 1 for row in rows),
        failures=failures,
        defects=dict(defects),
        argmax=argmax,
        max_defect=max_defect,
        weight_J0=weight_J0,
        weight_J=weight_J,
        identity_holds=weighted_defects == weight_J0,
        telescoping_holds=weight_J0 <= max_defect * weight_J,
        prob_J0_direct=prob_J0(e, activity, v0),
        prob_J0_ratio=weight_J0 / weight_J,
        direction_failures=sum(row.direction_failed for row in rows),
        small_rows=sum(row.kind is FlowKind.SMALL for row in rows),
        large_rows=sum(row.kind is FlowKind.LARGE for row in rows),
    )
    logger.info(
        "Defect audit at lambda=%s: %d rows, max defect %.6f, prob_J0 %.6f",
        activity, report.rows, float(max_defect), float(report.prob_J0_direct),
    )
    return report


def main_bound_check(rows: Iterable[FlowRow], activity: Activity) -> list[MainBoundGroup]:
    """Per (t, F, S, J, j) group of large rows: Σ w(I)/w(J) ν(I, J) against β^{t/2}"""
    activity = Fraction(activity)
    beta = FlowConstants.of(activity).beta
    totals: dict[tuple, Fraction] = defaultdict(Fraction)
    for row in rows:
        if row.kind is not FlowKind.LARGE:
            continue
        for mask, value in row.entries.items():
            key = (row.pair.t, row.approx.F.mask, row.approx.S.mask, mask, row.j)
            totals[key] += activity ** (row.I.size - VertexSet(mask).size) * value
    return [
        MainBoundGroup(key=key, t=key[0], total=total, target=float(beta) ** (key[0] / 2))
        for key, total in sorted(totals.items())
    ]


def small_I_bound_check(rows: Iterable[FlowRow], activity: Activity) -> bool:
    """Every small-row term w(I)/w(J) ν(I, J) equals (1+λ)^{-|G0^j|} ≤ (1+λ)^{-t}"""
    activity = Fraction(activity)
    for row in rows:
        if row.kind is not FlowKind.SMALL:
            continue
        expected = (1 + activity) ** -len(row.shift.G0j)
        if expected > (1 + activity) ** -row.pair.t:
            return False
        for mask, value in row.entries.items():
            if activity ** (row.I.size - VertexSet(mask).size) * value != expected:
                return False
    return True


def cover_audit(rows: Iterable[FlowRow], search: bool = True) -> tuple[int, list[dict]]:
    """Cover structure of every (I, j, J) triple of the large rows"""
    checked = 0
    failures = []
    for row in rows:
        if row.kind is not FlowKind.LARGE:
            continue
        for mask in row.entries:
            structure = cover_structure(row.pair, row.approx, VertexSet(mask), row.j, search)
            checked += 1
            properties = {
                "cover": structure.is_cover,
                "minimal": structure.minimal,
                "KNQ": structure.k_is_neighborhood,
                "LK": structure.exchange_bounds,
                "knowK": structure.k_recovered,
            }
            failed = [name for name, holds in properties.items() if holds is False]
            if failed:
                failures.append({"I_mask": row.I.mask, "j": row.j, "J_mask": mask, "failed": failed})
    logger.info("Checked %d cover structures: %d failures", checked, len(failures))
    return checked, failures
