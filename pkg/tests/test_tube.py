from collections import Counter
from fractions import Fraction
import itertools

import pytest

from app.algebra.tube import aut_order_formula, gl_order, partitions
from app.core.config import settings
from app.core.exceptions import EngineError
from app.utils import linalg


def jordan_tube(alg):
    point = next(x for x in alg.line.closed_points(1) if not x.is_exceptional)
    return alg.atlas.tube(point)


def small_classes(tube, max_length):
    out = []
    for total in range(1, max_length + 1):
        for counts in itertools.product(range(total + 1), repeat=tube.n):
            if sum(counts) == total:
                out.extend(tube.classes_with_dimvec(counts))
    return out


def test_partitions_and_gl():
    assert len(list(partitions(4))) == 5
    assert list(partitions(3)) == [(3,), (2, 1), (1, 1, 1)]
    assert gl_order(2, 2) == 6
    assert gl_order(2, 3) == 48


def test_aut_formula_small_partitions():
    assert aut_order_formula((1,), 2) == 1
    assert aut_order_formula((1, 1), 2) == 6
    # End(S^{(2)} ⊕ S) 维数 5, 根基维数 3
    assert aut_order_formula((2, 1), 2) == 2 ** 3


def test_dimvec_and_socle(w21_q2):
    tube = w21_q2.branch_tube(1)
    assert tube.n == 2
    m = tube.uniserial(1, 3)
    assert tube.dimvec(m) == (1, 2)
    assert tube.socle_vertices(m) == [1]
    assert tube.socle_vertices(tube.uniserial(1, 2)) == [0]


def test_classes_with_dimvec(w21_q2):
    tube = w21_q2.branch_tube(1)
    classes = tube.classes_with_dimvec((1, 1))
    assert len(classes) == 3
    assert tube.make([(0, 1), (1, 1)]) in classes
    assert tube.uniserial(1, 2) in classes


def test_hom_and_ext_dims(w31_q2):
    tube = w31_q2.branch_tube(1)
    s0, s1, s2 = (tube.simple(j) for j in range(3))
    assert tube.hom_dim(s0, s0) == 1
    assert tube.ext_dim(s1, s0) == 1
    assert tube.ext_dim(s0, s1) == 0
    assert tube.hom_dim(tube.uniserial(0, 3), tube.uniserial(0, 3)) == 1
    assert tube.hom_dim(tube.uniserial(0, 4), tube.uniserial(0, 4)) == 2


def test_hom_dim_is_null_space_dimension(w31_q2, p1_q3):
    tube = w31_q2.branch_tube(1)
    classes = small_classes(tube, 3)
    for m in classes:
        for n in classes:
            sm, tm = tube.model(m), tube.model(n)
            cols = sum(a * b for a, b in zip(sm.dims, tm.dims))
            nullity = linalg.null_space(tube.GF, tube.coboundary(sm, tm), cols).shape[0]
            assert tube.hom_dim(m, n) == nullity
            assert tube.hom_dim(m, n) == tube.hom_dim_formula(m, n)

    point = next(x for x in p1_q3.line.closed_points(2) if x.degree == 2)
    quad = p1_q3.atlas.tube(point)
    s2 = quad.uniserial(0, 2)
    assert quad.hom_dim(s2, s2) == 2
    assert quad.hom_exp(s2, s2) == 4


def test_hom_dim_above_model_cap(monkeypatch, w31_q2):
    tube = w31_q2.branch_tube(1)

    def no_model(*args):
        raise EngineError("model used")

    monkeypatch.setattr(settings, "HOM_MODEL_CAP", 0)
    monkeypatch.setattr(tube, "coboundary", no_model)
    big = tube.uniserial(2, 5)
    assert tube.hom_dim(big, big) == 2


def test_left_perpendicular(w31_q2):
    tube = w31_q2.branch_tube(1)
    assert tube.left_perpendicular(tube.uniserial(0, 2), [2])
    assert not tube.left_perpendicular(tube.simple(2), [2])


def test_ext_middles_simple_pair(w21_q2):
    tube = w21_q2.branch_tube(1)
    s0, s1 = tube.simple(0), tube.simple(1)
    middles = tube.ext_middles(s1, s0)
    assert middles == Counter({tube.make([(1, 1), (0, 1)]): 1, tube.uniserial(1, 2): 1})


def test_ext_middles_split_only(w31_q2):
    tube = w31_q2.branch_tube(1)
    s0, s1 = tube.simple(0), tube.simple(1)
    assert tube.ext_middles(s0, s1) == Counter({tube.make([(0, 1), (1, 1)]): 1})


def test_hall_numbers(w21_q2):
    tube = w21_q2.branch_tube(1)
    s0, s1 = tube.simple(0), tube.simple(1)
    assert tube.hall_number(tube.uniserial(1, 2), s1, s0) == 1
    assert tube.hall_number(tube.uniserial(1, 2), s0, s1) == 0
    assert tube.ext_count_with_middle(s1, s0, tube.uniserial(1, 2)) == 1


def test_hall_number_jordan_semisimple(p1_q2):
    tube = jordan_tube(p1_q2)
    s = tube.simple(0)
    # S ⊕ S 中同构于 S 的子对象个数为 q+1
    assert tube.hall_number(tube.make([(0, 1), (0, 1)]), s, s) == Fraction(3)


@pytest.mark.parametrize("Q", [2, 3])
def test_aut_order_matches_formula_on_jordan(Q, p1_q2, p1_q3):
    tube = jordan_tube(p1_q2 if Q == 2 else p1_q3)
    for size in range(1, 5):
        for lam in partitions(size):
            assert tube.aut_order(tube.partition_class(lam)) == aut_order_formula(lam, Q)


def test_aut_order_brute_force_c2(w21_q2):
    tube = w21_q2.branch_tube(1)
    for tors in small_classes(tube, 3):
        assert tube.brute_force_aut_order(tors) == tube.aut_order(tors)


def test_aut_order_brute_force_jordan(p1_q2):
    tube = jordan_tube(p1_q2)
    for tors in small_classes(tube, 3):
        assert tube.brute_force_aut_order(tors) == tube.aut_order(tors)


def test_branch_aut_closed_forms(w21_q2):
    tube = w21_q2.branch_tube(1)
    q, p = 2, 2
    for u in (1, 2):
        assert tube.aut_order(tube.uniserial(0, u * p - 1)) == q ** (u - 1) * (q - 1)
        assert tube.aut_order(tube.uniserial(1, u * p + 1)) == q ** u * (q - 1)


def test_mrd_sets(w21_q2):
    tube = w21_q2.branch_tube(1)
    assert tube.mrd_sets("real_minus", 1) == [tube.uniserial(0, 1)]
    assert tube.mrd_sets("real_plus", 1) == sorted({tube.uniserial(1, 3), tube.make([(1, 1), (0, 2)])})
    assert tube.uniserial(1, 2) in tube.mrd_sets("imaginary", 1)


def product_pairs(tube, max_length):
    classes = small_classes(tube, max_length - 1)
    for left in classes:
        for right in classes:
            if left.length + right.length <= max_length:
                yield left, right


def nonzero(counter):
    return {k: v for k, v in counter.items() if v}


def test_product_terms_match_oracle_c2(w21_q2):
    tube = w21_q2.branch_tube(1)
    for left, right in product_pairs(tube, 3):
        assert nonzero(tube.product_terms(left, right)) == nonzero(tube.product_terms_oracle(left, right))


@pytest.mark.slow
def test_product_terms_match_oracle_c3_and_jordan(w31_q2, p1_q2):
    for tube in (w31_q2.branch_tube(1), jordan_tube(p1_q2)):
        for left, right in product_pairs(tube, 4):
            assert nonzero(tube.product_terms(left, right)) == nonzero(tube.product_terms_oracle(left, right))


def test_degree_two_point(p1_q2):
    point = next(x for x in p1_q2.line.closed_points(2) if x.degree == 2)
    tube = p1_q2.atlas.tube(point)
    assert tube.Q == 4
    assert tube.aut_order(tube.simple(0)) == 3
    assert tube.brute_force_aut_order(tube.simple(0)) == 3
