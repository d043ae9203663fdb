from dataclasses import dataclass, field

import numpy as np

from app.modules.lattice.models import Occupancy, Torus, VertexSet


@dataclass
class ChainState:
    """Mutable state of one heat-bath chain

    sites lists the updatable (unfrozen) vertices; a step picks a uniform index
    into it. occupied_neighbors[v] counts the occupied neighbors of v.
    """
    torus: Torus
    frozen: VertexSet
    sites: tuple[int, ...]
    occupied: list[bool]
    occupied_neighbors: list[int]
    rng: np.random.Generator = field(repr=False)
    seed: int
    replica: int = 0
    sweeps: int = 0
    steps: int = 0

    @property
    def occupancy(self) -> Occupancy:
        return VertexSet.of(v for v, flag in enumerate(self.occupied) if flag)

    @property
    def sweep_length(self) -> int:
        """One sweep = vertex_count - |frozen| single-site updates"""
        return len(self.sites)


@dataclass(frozen=True)
class EstimateReport:
    v0: int
    estimate: float
    stderr: float
    sweeps: int
    burn_in: int
    seed: int
    replica: int = 0
    burn_in_warning: bool = False


@dataclass(frozen=True)
class GapPoint:
    activity: float
    even: EstimateReport
    odd: EstimateReport

    @property
    def gap(self) -> float:
        return self.even.estimate - self.odd.estimate

    @property
    def gap_stderr(self) -> float:
        return float(np.hypot(self.even.stderr, self.odd.stderr))
