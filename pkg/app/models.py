"""
Central import for the domain types of every module.
"""

from app.modules.lattice.models import Direction, Occupancy, Torus, VertexSet
from app.modules.ensemble.models import Ensemble, ExactMeasure
from app.modules.sampler.models import ChainState, EstimateReport, GapPoint
from app.modules.contour.models import ContourTrace, GAPair
from app.modules.approx.models import ApproxPair, LegalCover, PiResult
from app.modules.flow.models import FlowPolicy, FlowRow, ShiftData
from app.modules.iso.models import BallCounts

__all__ = [
    "Direction",
    "Occupancy",
    "Torus",
    "VertexSet",
    "Ensemble",
    "ExactMeasure",
    "ChainState",
    "EstimateReport",
    "GapPoint",
    "ContourTrace",
    "GAPair",
    "ApproxPair",
    "LegalCover",
    "PiResult",
    "FlowPolicy",
    "FlowRow",
    "ShiftData",
    "BallCounts",
]
