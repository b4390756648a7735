from fractions import Fraction

import pytest

from app.algebra.qfield import QField, Scalar, check_ground_q, qfield, scalar_arith
from app.core.exceptions import ScalarError


def test_ground_q_accepts_non_square_prime_powers():
    for q in (2, 3, 5, 7, 8, 27):
        assert check_ground_q(q) == q


@pytest.mark.parametrize("q", [1, 4, 6, 9, 10, 16])
def test_ground_q_rejects(q):
    with pytest.raises(ScalarError):
        check_ground_q(q)


def test_v_squared_is_q(qf2, qf3):
    assert qf2.v * qf2.v == 2
    assert qf3.v * qf3.v == 3
    assert qf3.v_power(2) == 3
    assert qf3.v_power(-2) == Fraction(1, 3)
    assert qf2.v_power(3) == qf2.v * 2


def test_inverse_and_division(qf3):
    x = qf3.scalar(1, 2)
    assert x * x.inverse() == 1
    assert (qf3.one / qf3.v) * 3 == qf3.v
    with pytest.raises(ScalarError):
        qf3.zero.inverse()


def test_mixed_q_rejected():
    with pytest.raises(ScalarError):
        qfield(2).v + qfield(3).v


def test_quantum_integers(qf2):
    # [2] = v + v^{-1}
    assert qf2.quantum_int(2) == qf2.v + qf2.v_power(-1)
    assert qf2.quantum_int(1) == 1
    assert qf2.quantum_int(0) == 0
    assert qf2.quantum_int(-2) == -qf2.quantum_int(2)
    # [4] = [2](v² + v^{-2})
    assert qf2.quantum_int(4) == qf2.quantum_int(2) * (qf2.v_power(2) + qf2.v_power(-2))


def test_n_factor(qf3):
    assert qf3.n_factor(0) == 1
    assert qf3.n_factor(1) == -2
    assert qf3.n_factor(2) == (1 - 3) * (1 - 9)
    assert qf3.n_factor(1, 2) == -8


def test_theta_zero(qf2):
    # 1/(v - v^{-1}) = v/(q-1)
    assert qf2.theta_zero() == qf2.v
    assert qfield(3).theta_zero() == qfield(3).v / 2


def test_render():
    qf = QField(2)
    assert qf.scalar(Fraction(1, 2), 0).render() == "1/2"
    assert qf.v.render() == "1*sqrt(2)"
    assert (-qf.v).render() == "-1*sqrt(2)"
    assert qf.scalar(1, Fraction(-1, 2)).render() == "1 - 1/2*sqrt(2)"


def test_scalar_arith_ops(qf3):
    a, b = qf3.scalar(1, 1), qf3.scalar(2, 0)
    assert scalar_arith(a, b, "add") == qf3.scalar(3, 1)
    assert scalar_arith(a, b, "mul") == qf3.scalar(2, 2)
    assert scalar_arith(a, b, "div") == qf3.scalar(Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(ScalarError):
        scalar_arith(a, b, "pow")


def test_scalar_is_rational(qf2):
    assert Scalar(3, 0, 2).is_rational
    assert (qf2.v * qf2.v).to_fraction() == 2
    with pytest.raises(ScalarError):
        qf2.v.to_fraction()
