import itertools

import pytest

from app.algebra.lattice import Lattice, WeightData
from app.core.exceptions import ConfigError


@pytest.fixture
def lat23():
    return Lattice(WeightData((2, 3)))


def test_weight_data_validation():
    with pytest.raises(ConfigError):
        WeightData((4,))
    with pytest.raises(ConfigError):
        WeightData((2, 0))
    assert WeightData((2, 3)).p == 6


def test_lvec_normal_form(lat23):
    x = lat23.lvec(0, [2, 4])
    assert (x.l, x.a) == (2, (0, 1))
    assert lat23.x_vector(1).scale(2) == lat23.lvec(1)
    assert (lat23.lvec(1) - lat23.x_vector(2)).a == (0, 2)
    assert -lat23.lvec(1) == lat23.lvec(-1)


def test_degree_and_effective(lat23):
    assert lat23.lvec(1).degree == 6
    assert lat23.x_vector(1).degree == 3
    assert lat23.x_vector(2).degree == 2
    assert lat23.dualizing().degree == -5
    assert not (lat23.x_vector(1) - lat23.x_vector(2)).is_effective
    assert len(lat23.effective_below(6)) == 6


def test_simple_classes_sum_to_delta(lat23):
    total = lat23.zero()
    for j in range(3):
        total = total + lat23.s_hat(2, j)
    assert total == lat23.delta()
    assert lat23.s_hat(1, 2) == lat23.s_hat(1, 0)
    assert lat23.class_of_uniserial(2, 1, 3) == lat23.delta()


def test_class_of_line(lat23):
    x = lat23.lvec(1, [1, 2])
    expected = lat23.o_hat() + lat23.delta() + lat23.s_hat(1, 1) + lat23.s_hat(2, 1) + lat23.s_hat(2, 2)
    assert lat23.class_of_line(x) == expected
    assert lat23.deg_rank(lat23.class_of_line(x)) == (x.degree, 1)


def test_euler_form_matches_hom_minus_ext(lat23):
    vectors = [lat23.lvec(l, a) for l in (-1, 0, 1) for a in itertools.product(range(2), range(3))]
    for a, b in itertools.product(vectors, repeat=2):
        expected = lat23.hom_dim_lines(a, b) - lat23.ext_dim_lines(a, b)
        assert lat23.euler_form(lat23.class_of_line(a), lat23.class_of_line(b)) == expected


def test_lines_on_p1():
    lat = Lattice(WeightData((1, 1)))
    o, oc = lat.lvec(0), lat.lvec(1)
    assert lat.hom_dim_lines(o, oc) == 2
    assert lat.hom_dim_lines(oc, o) == 0
    assert lat.ext_dim_lines(o, lat.lvec(-2)) == 1
    assert lat.ext_dim_lines(oc, o) == 0
    assert lat.euler_form(lat.delta(), lat.o_hat()) == -1


def test_render(lat23):
    assert lat23.render(lat23.zero()) == "0"
    assert lat23.render(lat23.s_hat(1, 1)) == "1a[1,1]"
    assert lat23.render(lat23.o_hat()) == "1O"
