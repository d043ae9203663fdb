from fractions import Fraction

import pytest

from app.modules.contour.service import build_contour, enumerate_J0
from app.modules.ensemble.enums import Boundary
from app.modules.ensemble.service import make_ensemble
from app.modules.lattice.models import VertexSet
from app.modules.lattice.service import delta_set, make_torus, vertex_index

ACTIVITIES = [Fraction(1, 2), Fraction(1), Fraction(2), Fraction(5)]


@pytest.fixture(scope="session")
def torus4():
    """The 4x4 torus (d=2, M=2)"""
    return make_torus(2, 2)


@pytest.fixture(scope="session")
def torus6():
    """The 6x6 torus (d=2, M=3), the smallest with a nonempty J0"""
    return make_torus(2, 3)


@pytest.fixture(scope="session")
def even4(torus4):
    return make_ensemble(torus4, Boundary.EVEN)


@pytest.fixture(scope="session")
def odd4(torus4):
    return make_ensemble(torus4, Boundary.ODD)


@pytest.fixture(scope="session")
def even6(torus6):
    return make_ensemble(torus6, Boundary.EVEN)


@pytest.fixture(scope="session")
def v0_6(torus6):
    return vertex_index(torus6, (1, 0))


@pytest.fixture(scope="session")
def J0_6(even6, v0_6):
    """Every member of J0 on the 6x6 torus"""
    return list(enumerate_J0(even6, v0_6))


@pytest.fixture(scope="session")
def traces6(torus6, J0_6, v0_6, even6):
    return [build_contour(torus6, I, v0_6, even6.delta) for I in J0_6]


@pytest.fixture(scope="session")
def singleton6(torus6, v0_6):
    """Contour of (Δ ∩ E) ∪ {v0}"""
    I = (delta_set(torus6) & torus6.evens) | VertexSet.of([v0_6])
    return build_contour(torus6, I, v0_6)
