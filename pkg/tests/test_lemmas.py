import pytest

from app.algebra.generators import GeneratorSet, Vertex
from app.core.exceptions import CapExceededError
from app.schemas.config import CapsConfig
from app.schemas.report import FAILS, HOLDS, PERPENDICULAR, SKIPPED
from app.services.lemma_service import LemmaService, tube_classes


def statuses(records):
    return {r.status for r in records}


@pytest.fixture(scope="module")
def lemmas_w21(gens_w21):
    return LemmaService(gens_w21, CapsConfig(max_index=2, samples=6), seed=7)


@pytest.fixture(scope="module")
def lemmas_p1(gens_p1):
    return LemmaService(gens_p1, CapsConfig(max_index=2))


def test_tube_classes(w21_q2):
    classes = tube_classes(w21_q2.branch_tube(1), 2)
    assert len(classes) == 7
    assert len(set(classes)) == 7


def test_check_records_residual(lemmas_p1):
    record = lemmas_p1.check("unit", {}, lambda g: (g.algebra.one(), g.algebra.zero()))
    assert record.status == FAILS
    assert record.residual.startswith("1 ;")
    record = lemmas_p1.check("unit", {}, lambda g: (g.algebra.one(), g.algebra.one()))
    assert record.status == HOLDS


def test_check_skips_on_caps(lemmas_p1):
    def build(g):
        raise CapExceededError("too large")

    record = lemmas_p1.check("cap", {"n": 1}, build)
    assert record.status == SKIPPED
    assert "too large" in record.reason


def test_coprime_and_aut_counts(lemmas_p1):
    assert lemmas_p1.coprime_counts(2).status == HOLDS
    assert lemmas_p1.coprime_counts(3).status == HOLDS
    assert lemmas_p1.aut_partitions(2).status == HOLDS
    assert lemmas_p1.aut_brute_force(1).status == HOLDS


def test_branch_counts(lemmas_w21):
    assert lemmas_w21.aut_branch().status == HOLDS
    assert lemmas_w21.aut_brute_force(2).status == HOLDS
    for a in (1, 2):
        for b in (1, 2):
            assert lemmas_w21.phi_psi(a, b).status == HOLDS
    for shift in (-1, 0):
        assert lemmas_w21.ext_sum(1, shift).status == HOLDS


def test_tube_closed_forms(lemmas_w21):
    records = lemmas_w21.tube_closed_forms()
    assert len(records) == 4
    assert statuses(records) == {HOLDS}


def test_line_and_simple_products(lemmas_w21):
    for l in (0, 1):
        assert statuses(lemmas_w21.simple_line_products(1, l)) == {HOLDS}
        assert lemmas_w21.pi_line(1, l).status == HOLDS
        assert lemmas_w21.middle_ending(1, 1, 2, l).status == HOLDS


def test_star_identities_on_p1(lemmas_p1):
    for m in (1, 2):
        assert lemmas_p1.h_point_decomposition(m).status == HOLDS
        assert statuses(lemmas_p1.theta_star_twist(m)) == {HOLDS}


def test_series_roundtrip(lemmas_w21):
    records = lemmas_w21.series_roundtrip(Vertex(1, 1))
    assert records
    assert statuses(records) == {HOLDS}


def test_closed_form_suite_needs_branch(lemmas_p1):
    (record,) = lemmas_p1.closed_form_suite()
    assert record.status == SKIPPED


def test_agreement_checks(lemmas_p1, lemmas_w21, w31_q2):
    assert lemmas_p1.p1_agreement().status == SKIPPED
    assert lemmas_w21.p1_agreement().status == HOLDS
    assert lemmas_w21.perp_agreement().status == SKIPPED
    record = LemmaService(GeneratorSet(w31_q2, 1), CapsConfig(max_index=1)).perp_agreement()
    assert record.status == HOLDS
    assert record.instance.transport == PERPENDICULAR


def test_associativity_is_seeded(lemmas_w21, gens_w21):
    first = lemmas_w21.associativity()
    again = LemmaService(gens_w21, CapsConfig(max_index=2, samples=6), seed=7).associativity()
    assert first.status == HOLDS
    assert first.instance.params == again.instance.params
    assert first.instance.params["seed"] == 7
    assert first.instance.params["checked"] + first.instance.params["skipped"] == 6


@pytest.mark.slow
def test_associativity_on_two_exceptional_points(gens_w22):
    record = LemmaService(gens_w22, CapsConfig(max_index=1)).associativity(200)
    assert record.status == HOLDS
    assert record.instance.params["samples"] == 200
    assert record.instance.params["checked"] > 0


@pytest.mark.slow
def test_theta_pm_on_two_exceptional_points(gens_w22):
    lemmas = LemmaService(gens_w22, CapsConfig(max_index=2))
    for m in range(0, 3):
        assert statuses(lemmas.theta_pm(m)) == {HOLDS}


@pytest.mark.slow
def test_product_oracle_suite(lemmas_w21):
    records = [lemmas_w21.product_oracle(tube, 3) for tube in lemmas_w21.oracle_tubes()]
    assert statuses(records) == {HOLDS}
