from dataclasses import dataclass, field
from typing import Iterable, Iterator


class VertexSet:
    """Set of torus vertices stored as a bitmask over vertex indices"""

    __slots__ = ("mask", "size")

    def __init__(self, mask: int = 0):
        self.mask = mask
        self.size = mask.bit_count()

    @classmethod
    def of(cls, vertices: Iterable[int]) -> "VertexSet":
        mask = 0
        for v in vertices:
            mask |= 1 << v
        return cls(mask)

    def __len__(self) -> int:
        return self.size

    def __bool__(self) -> bool:
        return self.mask != 0

    def __iter__(self) -> Iterator[int]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def __contains__(self, v: int) -> bool:
        return (self.mask >> v) & 1 == 1

    def __or__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.mask | other.mask)

    def __and__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.mask & other.mask)

    def __sub__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.mask & ~other.mask)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VertexSet) and self.mask == other.mask

    def __hash__(self) -> int:
        return hash(self.mask)

    def __le__(self, other: "VertexSet") -> bool:
        return self.mask & ~other.mask == 0

    def __ge__(self, other: "VertexSet") -> bool:
        return other <= self

    def isdisjoint(self, other: "VertexSet") -> bool:
        return self.mask & other.mask == 0

    def min(self) -> int:
        """Smallest vertex index (the set must be nonempty)"""
        return (self.mask & -self.mask).bit_length() - 1

    def __repr__(self) -> str:
        return f"VertexSet({sorted(self)})"


# An independent set of the torus
Occupancy = VertexSet

# j in {+-1, ..., +-d}; e_j for j > 0, -e_{-j} for j < 0
Direction = int


@dataclass(frozen=True)
class Torus:
    """The discrete torus on {-(M-1), ..., M}^d with M identified to -M"""
    d: int
    M: int
    side: int = field(compare=False)
    vertex_count: int = field(compare=False)
    coords: tuple[tuple[int, ...], ...] = field(compare=False, repr=False)
    neighbors: tuple[tuple[int, ...], ...] = field(compare=False, repr=False)
    neighbor_masks: tuple[int, ...] = field(compare=False, repr=False)
    odd: tuple[bool, ...] = field(compare=False, repr=False)
    even_mask: int = field(compare=False, repr=False)
    odd_mask: int = field(compare=False, repr=False)
    shifts: dict[int, tuple[int, ...]] = field(compare=False, repr=False, hash=False)

    @property
    def degree(self) -> int:
        """l = 2d"""
        return 2 * self.d

    @property
    def full_mask(self) -> int:
        return (1 << self.vertex_count) - 1

    @property
    def vertices(self) -> VertexSet:
        return VertexSet(self.full_mask)

    @property
    def evens(self) -> VertexSet:
        return VertexSet(self.even_mask)

    @property
    def odds(self) -> VertexSet:
        return VertexSet(self.odd_mask)
