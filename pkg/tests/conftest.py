import pytest

from app.algebra.generators import GeneratorSet
from app.algebra.ihallcore import HallAlgebra
from app.algebra.qfield import qfield


@pytest.fixture(scope="session")
def qf2():
    return qfield(2)


@pytest.fixture(scope="session")
def qf3():
    return qfield(3)


@pytest.fixture(scope="session")
def p1_q2():
    """P¹, q=2"""
    return HallAlgebra(2, (1, 1))


@pytest.fixture(scope="session")
def p1_q3():
    return HallAlgebra(3, (1, 1))


@pytest.fixture(scope="session")
def w21_q2():
    """权重 (2,1), q=2: 例外管为 C_2"""
    return HallAlgebra(2, (2, 1))


@pytest.fixture(scope="session")
def w22_q3():
    return HallAlgebra(3, (2, 2))


@pytest.fixture(scope="session")
def w31_q2():
    return HallAlgebra(2, (3, 1))


@pytest.fixture(scope="session")
def w222_q3():
    """三个例外点, λ_3 = 1"""
    return HallAlgebra(3, (2, 2, 2), (1,))


@pytest.fixture(scope="session")
def gens_p1(p1_q2):
    return GeneratorSet(p1_q2, 2)


@pytest.fixture(scope="session")
def gens_w21(w21_q2):
    gens = GeneratorSet(w21_q2, 2)
    gens.bootstrap()
    return gens


@pytest.fixture(scope="session")
def gens_w22(w22_q3):
    gens = GeneratorSet(w22_q3, 2)
    gens.bootstrap()
    return gens
