import pytest

from app.algebra.generators import STAR, GeneratorSet, Vertex
from app.schemas.report import CONSUMED, FAILS, HOLDS, NATIVE, P1_IMAGE, PERPENDICULAR, SKIPPED
from app.services.verifier_service import PerturbedGenerators, VerifierService


@pytest.fixture(scope="module")
def verifier_p1(gens_p1):
    return VerifierService(gens_p1)


def test_instance_label_and_params(verifier_p1):
    inst = verifier_p1.instance("iDR5", Vertex(1, 1), STAR, k1=0, k2=1, l=-1)
    assert inst.label() == "iDR5([1,1],star;k1=0,k2=1,l=-1)"
    assert verifier_p1.params_key(inst) == (0, 1, -1)
    assert inst.transport == NATIVE


def test_evaluator_order(gens_w21, w31_q2):
    modes = [mode for mode, _ in VerifierService(gens_w21).evaluators(STAR, STAR)]
    assert modes == [NATIVE, P1_IMAGE]
    gens = GeneratorSet(w31_q2, 1)
    modes = [mode for mode, _ in VerifierService(gens).evaluators(STAR, Vertex(1, 1))]
    assert modes == [NATIVE, PERPENDICULAR]
    modes = [mode for mode, _ in VerifierService(gens).evaluators(STAR, Vertex(1, 2))]
    assert modes == [NATIVE]


def test_star_grid_shape(verifier_p1):
    grid = verifier_p1.relation_grid("star")
    relations = {inst.relation for inst in grid}
    assert relations == {"iDR1b", "iDR2", "hB1", "iDR3b"}
    assert all(inst.mu == "star" and inst.nu == "star" for inst in grid)
    assert verifier_p1.relation_grid("tube") == []


def test_star_relations_hold_on_p1(verifier_p1):
    records = verifier_p1.check_all(verifier_p1.relation_grid("star"))
    assert records
    bad = [r.instance.label() for r in records if r.status != HOLDS]
    assert bad == []


def test_failed_relation_reports_residual(gens_p1):
    verifier = VerifierService(gens_p1)
    inst = verifier.instance("iDR2", STAR, STAR, m=1, l=0)
    residual = verifier.residual(PerturbedGenerators(gens_p1, "B", STAR, 1), inst)
    assert not residual.is_zero
    assert verifier.residual(gens_p1, inst).is_zero
    # B_{⋆,1} 只有一项, 越界的项号不做扰动
    assert verifier.residual(PerturbedGenerators(gens_p1, "B", STAR, 1, term=1), inst).is_zero


def test_cap_is_recorded_as_skip(p1_q2):
    verifier = VerifierService(GeneratorSet(p1_q2, 2, index_cap=1))
    record = verifier.check_relation(verifier.instance("iDR2", STAR, STAR, m=2, l=0))
    assert record.status == SKIPPED
    assert record.reason.startswith(NATIVE)


def test_bootstrap_instances_are_tagged(gens_w21):
    verifier = VerifierService(gens_w21)
    mu = Vertex(1, 1)
    record = verifier.check_relation(verifier.instance("iDR2", mu, mu, m=1, l=0))
    assert record.status == CONSUMED
    record = verifier.check_relation(verifier.instance("iDR2", mu, mu, m=2, l=0))
    assert record.status == HOLDS


def test_negative_controls(verifier_p1):
    records = verifier_p1.check_negative()
    by_relation = {r.instance.relation: r for r in records}
    for name in ("negative:iDR2", "negative:hB1", "negative:iDR3b"):
        assert by_relation[name].status == HOLDS
    # 齐次管的挠层部分交换
    assert by_relation["negative:iDR1b"].status == SKIPPED
    assert by_relation["negative:iDR1b"].instance.mu == "star"
    assert by_relation["negative:iDR4"].status == SKIPPED
    assert by_relation["negative:iDR4"].instance.mu is None
    assert not any(r.status == FAILS for r in records)


def test_zero_cartan_pair(verifier_p1, w22_q3, w31_q2):
    assert verifier_p1._zero_cartan_pair() is None
    assert VerifierService(GeneratorSet(w31_q2, 1))._zero_cartan_pair() == (STAR, Vertex(1, 2))
    verifier = VerifierService(GeneratorSet(w22_q3, 1))
    assert verifier._zero_cartan_pair() == (Vertex(1, 1), Vertex(2, 1))
    controls = {inst.relation: (targets, must_move) for inst, targets, must_move in verifier.negative_controls()}
    assert controls["iDR4"] == ([("B", Vertex(2, 1), 1), ("B", Vertex(1, 1), 0)], False)
    assert controls["iDR2"][1] is True


def test_negative_commuting_pair_is_sensitive(w31_q2):
    gens = GeneratorSet(w31_q2, 1)
    verifier = VerifierService(gens)
    inst = verifier.instance("iDR4", STAR, Vertex(1, 2), k=0, l=1)
    assert verifier.residual(gens, inst).is_zero
    assert len(gens.B(Vertex(1, 2), 1).items()) > 1
    assert not verifier.residual(PerturbedGenerators(gens, "B", Vertex(1, 2), 1), inst).is_zero

    records = verifier.check_negative()
    idr4 = [r for r in records if r.instance.relation == "negative:iDR4"]
    assert len(idr4) == 1
    assert idr4[0].status == HOLDS
    assert idr4[0].instance.transport == NATIVE
    assert idr4[0].instance.mu == "star" and idr4[0].instance.nu == "[1,2]"
    idr1b = [r for r in records if r.instance.relation == "negative:iDR1b"]
    assert len(idr1b) == 2
    assert {r.status for r in idr1b} <= {HOLDS, SKIPPED}


@pytest.mark.slow
def test_tube_relations_on_cyclic_tube(gens_w21):
    verifier = VerifierService(gens_w21)
    records = verifier.check_all(verifier.relation_grid("tube"))
    assert {r.status for r in records} <= {HOLDS, CONSUMED}


@pytest.mark.slow
def test_mixed_relations_on_cyclic_tube(gens_w21):
    verifier = VerifierService(gens_w21)
    records = verifier.check_all(verifier.relation_grid("mixed"))
    assert not [r.instance.label() for r in records if r.status == FAILS]


def test_bootstrap_only_instances(gens_w21):
    verifier = VerifierService(gens_w21)
    s11, s12 = Vertex(1, 1), Vertex(1, 2)
    assert verifier.bootstrap_only(verifier.instance("iDR2", s12, s11, m=2, l=0))
    assert not verifier.bootstrap_only(verifier.instance("iDR2", s12, s11, m=1, l=0))
    assert not verifier.bootstrap_only(verifier.instance("iDR2", s11, s12, m=2, l=0))
    assert verifier.bootstrap_only(verifier.instance("iDR1b", s11, s12, m=1, n=2))
    assert not verifier.bootstrap_only(verifier.instance("iDR3a", s12, s11, k=0, l=0))


@pytest.mark.slow
def test_branch_relations_on_two_exceptional_points(gens_w22):
    verifier = VerifierService(gens_w22, max_index=1)
    grid = verifier.relation_grid("mixed") + verifier.relation_grid("tube")
    assert {inst.relation for inst in grid} == {"iDR1b", "iDR2", "hB1", "iDR3a", "iDR3b", "iDR4", "iDR5"}
    records = verifier.check_all(grid)
    assert not [r.instance.label() for r in records if r.status == FAILS]
    assert any(r.status == CONSUMED for r in records)
    assert sum(r.status == HOLDS for r in records) > len(records) // 2


@pytest.mark.slow
def test_branch_relations_on_three_cycle(w31_q2):
    gens = GeneratorSet(w31_q2, 1)
    gens.bootstrap()
    verifier = VerifierService(gens)
    grid = verifier.relation_grid("mixed") + verifier.relation_grid("tube")
    assert any(inst.mu == "[1,2]" for inst in grid)
    records = verifier.check_all(grid)
    assert not [r.instance.label() for r in records if r.status == FAILS]
