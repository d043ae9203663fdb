import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Iterator, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import PreconditionError, require
from app.modules.ensemble.enums import Boundary
from app.modules.ensemble.models import Ensemble
from app.modules.ensemble.service import make_ensemble
from app.modules.lattice.models import Occupancy, Torus
from app.modules.lattice.service import delta_set, is_independent, make_torus, shift, shift_set
from .models import ChainState, EstimateReport, GapPoint

logger = logging.getLogger(__name__)

# Random draws are generated in blocks of this many steps
DRAW_BLOCK = 1 << 16


# ========================================
# Chains
# ========================================

def chain_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Counter-based Philox stream keyed by (seed, replica)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(replica,))))


def make_chain(
    e: Ensemble,
    seed: int,
    replica: int = 0,
    site_order: Optional[Sequence[int]] = None,
    initial: Optional[Occupancy] = None,
) -> ChainState:
    """Chain started from the frozen set (or initial), updating sites in site_order

    Two chains whose site orders are images under an automorphism, driven by the
    same (seed, replica), stay images of each other step by step.
    """
    torus = e.torus
    if site_order is None:
        sites = tuple(v for v in range(torus.vertex_count) if v not in e.frozen)
    else:
        sites = tuple(site_order)
        if sorted(sites) != [v for v in range(torus.vertex_count) if v not in e.frozen]:
            raise PreconditionError("Site order must list every unfrozen vertex exactly once")
    start = e.frozen if initial is None else initial
    if not (e.frozen <= start and is_independent(torus, start)):
        raise PreconditionError("Initial occupancy must be independent and contain the frozen set")
    occupied = [v in start for v in range(torus.vertex_count)]
    counts = [sum(occupied[u] for u in torus.neighbors[v]) for v in range(torus.vertex_count)]
    return ChainState(
        torus=torus,
        frozen=e.frozen,
        sites=sites,
        occupied=occupied,
        occupied_neighbors=counts,
        rng=chain_rng(seed, replica),
        seed=seed,
        replica=replica,
    )


def _occupation_chance(activity: float) -> float:
    if activity <= 0:
        raise PreconditionError(f"Sampling needs a positive activity, got {activity}")
    return activity / (1.0 + activity)


def _update(state: ChainState, v: int, u: float, p: float) -> None:
    """Heat-bath update of site v with uniform draw u"""
    new = state.occupied_neighbors[v] == 0 and u < p
    if new != state.occupied[v]:
        state.occupied[v] = new
        delta = 1 if new else -1
        for w in state.torus.neighbors[v]:
            state.occupied_neighbors[w] += delta


def glauber_step(state: ChainState, activity: float) -> ChainState:
    """One single-site heat-bath update at a uniformly chosen unfrozen vertex"""
    p = _occupation_chance(activity)
    if state.sites:
        k = int(state.rng.integers(len(state.sites)))
        _update(state, state.sites[k], float(state.rng.random()), p)
    state.steps += 1
    return state


def _check_state(state: ChainState) -> None:
    occupancy = state.occupancy
    require(is_independent(state.torus, occupancy), "Chain left the independent sets",
            occupancy_mask=occupancy.mask, sweeps=state.sweeps)
    require(state.frozen <= occupancy, "Chain released a frozen vertex",
            occupancy_mask=occupancy.mask, sweeps=state.sweeps)


def run_sweeps(state: ChainState, activity: float, sweeps: int, observe: Optional[int] = None) -> np.ndarray:
    """Advance by whole sweeps; returns the indicator of observe after each sweep"""
    p = _occupation_chance(activity)
    trace = np.zeros(sweeps, dtype=np.uint8)
    n = state.sweep_length
    if n == 0:
        if observe is not None:
            trace[:] = state.occupied[observe]
        state.sweeps += sweeps
        return trace
    sites = state.sites
    update = _update
    picks: list[int] = []
    draws: list[float] = []
    cursor = 0
    for sweep in range(sweeps):
        for _ in range(n):
            if cursor == len(picks):
                picks = state.rng.integers(n, size=DRAW_BLOCK).tolist()
                draws = state.rng.random(DRAW_BLOCK).tolist()
                cursor = 0
            update(state, sites[picks[cursor]], draws[cursor], p)
            cursor += 1
        state.steps += n
        state.sweeps += 1
        if observe is not None:
            trace[sweep] = state.occupied[observe]
        if settings.DEBUG:
            _check_state(state)
    return trace


# ========================================
# Estimates
# ========================================

def batch_means(trace: np.ndarray, batches: Optional[int] = None) -> tuple[float, float]:
    """Mean of the trace and its batch-means standard error"""
    n = len(trace)
    if n == 0:
        return 0.0, 0.0
    mean = float(trace.mean())
    count = min(batches or settings.BATCH_COUNT, n)
    if count < 2:
        return mean, 0.0
    size = n // count
    means = trace[: count * size].reshape(count, size).mean(axis=1)
    return mean, float(means.std(ddof=1) / np.sqrt(count))


def burn_in_suspect(trace: np.ndarray, threshold: float = 4.0) -> bool:
    """First and second half of the retained trace disagree by more than threshold standard errors"""
    half = len(trace) // 2
    if half < 2:
        return False
    first, first_err = batch_means(trace[:half])
    second, second_err = batch_means(trace[half:])
    return abs(first - second) > threshold * float(np.hypot(first_err, second_err))


def estimate_occupation(
    e: Ensemble,
    activity: float,
    v0: int,
    sweeps: int,
    burn_in: int,
    seed: int,
    replica: int = 0,
    site_order: Optional[Sequence[int]] = None,
) -> EstimateReport:
    """Time average of 1{v0 ∈ I} over sweeps burn_in+1 .. sweeps"""
    if not sweeps > burn_in >= 0:
        raise PreconditionError(f"Need sweeps > burn_in >= 0, got sweeps={sweeps} burn_in={burn_in}")
    state = make_chain(e, seed, replica, site_order)
    run_sweeps(state, activity, burn_in)
    trace = run_sweeps(state, activity, sweeps - burn_in, observe=v0)
    estimate, stderr = batch_means(trace)
    warning = burn_in_suspect(trace)
    if warning:
        logger.warning(
            "Burn-in looks inadequate at lambda=%s (v0=%s, seed=%d, burn_in=%d)",
            activity, e.torus.coords[v0], seed, burn_in,
        )
    return EstimateReport(
        v0=v0,
        estimate=estimate,
        stderr=stderr,
        sweeps=sweeps,
        burn_in=burn_in,
        seed=seed,
        replica=replica,
        burn_in_warning=warning,
    )


def sample_configurations(
    e: Ensemble,
    activity: float,
    count: int,
    thin: int,
    seed: int,
    burn_in: int = 0,
    replica: int = 0,
) -> Iterator[Occupancy]:
    """count configurations taken every thin sweeps after burn_in sweeps"""
    if count < 0 or thin < 1:
        raise PreconditionError(f"Need count >= 0 and thin >= 1, got count={count} thin={thin}")
    state = make_chain(e, seed, replica)
    run_sweeps(state, activity, burn_in)
    for _ in range(count):
        run_sweeps(state, activity, thin)
        yield state.occupancy


# ========================================
# Gap scans
# ========================================

def _gap_point(task: tuple[int, int, float, int, int, int, int, int]) -> GapPoint:
    d, M, activity, v0, sweeps, burn_in, seed, index = task
    torus = make_torus(d, M)
    even = estimate_occupation(make_ensemble(torus, Boundary.EVEN), activity, v0, sweeps, burn_in, seed,
                               replica=2 * index)
    odd = estimate_occupation(make_ensemble(torus, Boundary.ODD), activity, v0, sweeps, burn_in, seed,
                              replica=2 * index + 1)
    return GapPoint(activity=activity, even=even, odd=odd)


def gap_scan(
    d: int,
    M: int,
    activities: Sequence[float],
    v0: int,
    sweeps: int,
    burn_in: int,
    seed: int,
    workers: int = 1,
) -> list[GapPoint]:
    """Paired even/odd estimates at an even site, one independent replica pair per activity"""
    torus = make_torus(d, M)
    if torus.odd[v0]:
        raise PreconditionError(f"Gap site {torus.coords[v0]} must be even")
    tasks = [(d, M, float(a), v0, sweeps, burn_in, seed, i) for i, a in enumerate(activities)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_gap_point, tasks))
    else:
        points = [_gap_point(task) for task in tasks]
    for point in points:
        logger.info("lambda=%g gap=%.4f +- %.4f", point.activity, point.gap, point.gap_stderr)
    return points


def coupled_parity_swap(
    torus: Torus,
    activity: float,
    v0: int,
    sweeps: int,
    burn_in: int,
    seed: int,
) -> tuple[EstimateReport, EstimateReport]:
    """Even chain on Δ and odd chain on Δ+e_1 driven by the same draws through v -> v+e_1

    The two estimates (at v0 and v0+e_1) are equal bit for bit.
    """
    even = make_ensemble(torus, Boundary.EVEN)
    odd = make_ensemble(torus, Boundary.ODD, delta=shift_set(torus, delta_set(torus), 1))
    even_order = [v for v in range(torus.vertex_count) if v not in even.frozen]
    odd_order = [shift(torus, v, 1) for v in even_order]
    first = estimate_occupation(even, activity, v0, sweeps, burn_in, seed, site_order=even_order)
    second = estimate_occupation(odd, activity, shift(torus, v0, 1), sweeps, burn_in, seed, site_order=odd_order)
    return first, second
