from fractions import Fraction

import pytest

from app.algebra.generators import STAR, GeneratorSet, Vertex, h_to_theta, theta_to_h
from app.core.exceptions import CapExceededError, ConfigError


def test_vertex_parse():
    assert Vertex.parse("star") is STAR
    assert Vertex.parse("[1,2]") == Vertex(1, 2)
    assert Vertex.parse(" 2,1 ") == Vertex(2, 1)
    assert Vertex(1, 2).render() == "[1,2]"
    with pytest.raises(ConfigError):
        Vertex.parse("[a]")


def test_vertices_and_cartan(gens_w21, gens_p1):
    assert gens_w21.vertices() == [STAR, Vertex(1, 1)]
    assert gens_p1.vertices() == [STAR]
    assert gens_w21.cartan(STAR, STAR) == 2
    assert gens_w21.cartan(STAR, Vertex(1, 1)) == -1
    assert gens_w21.cartan(Vertex(1, 2), STAR) == 0
    assert gens_w21.cartan(Vertex(1, 1), Vertex(1, 2)) == -1
    assert gens_w21.cartan(Vertex(1, 1), Vertex(2, 1)) == 0
    with pytest.raises(ConfigError):
        gens_p1.check_vertex(Vertex(1, 1))


def test_star_generators(gens_p1, p1_q2):
    alg = p1_q2
    assert gens_p1.B(STAR, 2) == alg.ket(alg.lvec(2))
    assert gens_p1.Theta(STAR, 0) == alg.one().scale(alg.qf.theta_zero())
    assert gens_p1.Theta(STAR, -1).is_zero
    assert gens_p1.dump("Theta", STAR, 0) == "1*sqrt(2) ; lines=[] ; torsion={} ; K=[0]"
    assert gens_p1.get("B", STAR, 1) == gens_p1.B(STAR, 1)


def test_index_and_kind_errors(gens_p1):
    with pytest.raises(CapExceededError):
        gens_p1.B(STAR, gens_p1.index_cap + 1)
    with pytest.raises(ConfigError):
        gens_p1.H(STAR, 0)
    with pytest.raises(ConfigError):
        gens_p1.get("E", STAR, 1)


def test_theta_star_independent_of_twist(gens_p1):
    for m in (1, 2):
        assert gens_p1.theta_star(m, 0) == gens_p1.theta_star(m, 1)


def test_h_star_is_sum_of_point_parts(gens_p1):
    for m in (1, 2):
        total = gens_p1.algebra.zero()
        for x in gens_p1.points_dividing(m):
            total = total + gens_p1.h_point(x, m)
        assert total == gens_p1.h_star(m)


def test_h_point_degree_check(p1_q2, gens_p1):
    x = next(p for p in p1_q2.line.closed_points(2) if p.degree == 2)
    with pytest.raises(ConfigError):
        gens_p1.h_point(x, 1)


def test_b_minus_one_on_cyclic_tube(gens_w21, w21_q2):
    alg = w21_q2
    mu = Vertex(1, 1)
    expected = alg.ket(alg.exceptional(1, 0, 1)).scale(-1).shift(gens_w21.alpha(mu) - gens_w21.delta())
    assert gens_w21.B(mu, -1) == expected
    ((coh, alpha), coeff), = gens_w21.B(mu, -1).items()
    assert coeff == alg.qf.of(-1)
    assert gens_w21.B(mu, -1).coefficient(coh, alpha) == coeff
    assert gens_w21.B(mu, -1).coefficient(coh) == 0


def test_theta_one_on_cyclic_tube(gens_w21, w21_q2):
    alg = w21_q2
    qf = alg.qf
    s0, s1 = alg.exceptional(1, 0, 1), alg.exceptional(1, 1, 1)
    expected = (
        alg.ket(alg.exceptional(1, 1, 2)).scale(qf.v_power(-1))
        - alg.ket(s0, s1).scale(qf.v_power(-1))
        - alg.ket(alg.exceptional(1, 0, 2)).scale(qf.v)
    ).scale(Fraction(1, alg.q - 1))
    assert gens_w21.Theta(Vertex(1, 1), 1) == expected


def test_bootstrap_records_consumed(gens_w21):
    mu = Vertex(1, 1)
    assert gens_w21.is_consumed("iDR2", mu, mu, (1, 0))
    assert gens_w21.is_consumed("iDR2", mu, mu, (1, -1))
    assert gens_w21.is_consumed("iDR3b", mu, mu, (0, 1))
    assert not gens_w21.is_consumed("iDR2", mu, mu, (2, 0))


def test_theta_h_roundtrip(gens_w21):
    mu = Vertex(1, 1)
    thetas = [gens_w21.Theta(mu, r) for r in (1, 2)]
    hs = theta_to_h(gens_w21.algebra, thetas)
    assert hs[0] == thetas[0]
    assert hs == [gens_w21.H(mu, 1), gens_w21.H(mu, 2)]
    assert h_to_theta(gens_w21.algebra, hs) == thetas


def test_theta_star_matches_h_star(p1_q2):
    gens = GeneratorSet(p1_q2, 2)
    thetas = [gens.Theta(STAR, m) for m in (1, 2)]
    assert theta_to_h(p1_q2, thetas) == [gens.H(STAR, 1), gens.H(STAR, 2)]


def test_closed_forms_match_recursion(gens_w21):
    mu = Vertex(1, 1)
    plus, minus, theta = gens_w21.theorem_b(1, 1)
    assert plus == gens_w21.B(mu, 1)
    assert minus == gens_w21.B(mu, -1)
    assert theta == gens_w21.Theta(mu, 1)
    with pytest.raises(ConfigError):
        gens_w21.theorem_b(1, 0)


@pytest.mark.slow
def test_closed_forms_match_recursion_q3(gens_w22):
    for i in (1, 2):
        mu = Vertex(i, 1)
        for r in (1, 2):
            plus, minus, theta = gens_w22.theorem_b(i, r)
            assert plus == gens_w22.B(mu, r)
            assert minus == gens_w22.B(mu, -r)
            assert theta == gens_w22.Theta(mu, r)


def test_pi_from_m_set(gens_w21, w21_q2):
    qf = w21_q2.qf
    signed = gens_w21.m_set_sum(1, 1, (1, 1))
    assert signed == w21_q2.ket(w21_q2.exceptional(1, 0, 2)).scale(-1)
    assert gens_w21.pi(1, 1) == signed.scale(-qf.v_power(-1) * qf.theta_zero())
    assert gens_w21.pi(1, 0).is_zero
