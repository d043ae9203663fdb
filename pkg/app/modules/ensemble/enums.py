from enum import Enum


class Boundary(str, Enum):
    """Boundary condition imposed on the layer Δ"""
    EVEN = "even"  # Δ ∩ E occupied
    ODD = "odd"  # Δ ∩ O occupied
    FREE = "free"  # no conditioning
