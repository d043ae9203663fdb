from enum import Enum


class Parity(str, Enum):
    """Parity class of a torus vertex (coordinate sum)"""
    EVEN = "EVEN"  # class E
    ODD = "ODD"  # class O

    @property
    def other(self) -> "Parity":
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN
