import pytest

from app.algebra.generators import STAR, GeneratorSet, Vertex
from app.algebra.transport import (
    P1Embedding,
    PerpendicularTransport,
    TransportedGenerators,
    relation_vertices_in_perp,
)
from app.core.exceptions import ConfigError, TransportError


@pytest.fixture(scope="module")
def perp(w31_q2):
    return PerpendicularTransport(w31_q2)


def test_p1_embedding_objects(w21_q2):
    emb = P1Embedding(w21_q2)
    src = emb.source
    assert src.weights == (1, 1)
    assert emb.push(src.ket(src.lvec(1))) == w21_q2.ket(w21_q2.lvec(1))
    point = src.branch_tube(1).simple(0)
    assert emb.push(src.ket(point)) == w21_q2.ket(w21_q2.exceptional(1, 0, 2))
    assert emb.k0(src.lattice.delta()) == w21_q2.lattice.delta()


def test_p1_embedding_respects_products(w21_q2):
    emb = P1Embedding(w21_q2)
    src = emb.source
    for k, l in ((0, 1), (1, 0), (-1, 1)):
        a, b = src.ket(src.lvec(k)), src.ket(src.lvec(l))
        assert emb.push(a * b) == emb.push(a) * emb.push(b)


def test_perp_requires_nontrivial_first_weight(p1_q2):
    with pytest.raises(ConfigError):
        PerpendicularTransport(p1_q2)


def test_perp_model_weights(perp):
    assert perp.sub.weights == (2, 1)
    assert perp.forbidden(1) == [2]


def test_pushed_torsion_lands_in_perp(perp):
    tube = perp.sub.branch_tube(1)
    for top in (0, 1):
        for length in (1, 2, 3):
            coh = perp.sub.torsion_class(tube.uniserial(top, length))
            pushed = perp.push(coh)
            assert perp.contains(pushed)
            assert perp.pull(pushed) == coh


def test_pull_known_objects(perp, w31_q2):
    sub_tube = perp.sub.branch_tube(1)
    assert perp.pull(w31_q2.torsion_class(w31_q2.exceptional(1, 1, 1))) == perp.sub.torsion_class(sub_tube.uniserial(1, 1))
    assert perp.pull(w31_q2.torsion_class(w31_q2.exceptional(1, 0, 2))) == perp.sub.torsion_class(sub_tube.uniserial(0, 1))
    x1 = w31_q2.lattice.x_vector(1)
    assert perp.line_in_perp(w31_q2.lvec(0) + x1)
    assert not perp.line_in_perp(w31_q2.lvec(0) + x1 + x1)


def test_pull_outside_perp_raises(perp, w31_q2):
    lat = w31_q2.lattice
    with pytest.raises(TransportError):
        perp.pull(w31_q2.line_class(lat.lvec(0) + lat.x_vector(1) + lat.x_vector(1)))
    with pytest.raises(TransportError):
        perp.pull(w31_q2.torsion_class(w31_q2.exceptional(1, 2, 1)))
    with pytest.raises(TransportError):
        perp.pull_k0(lat.s_hat(1, 2))
    assert perp.pull_k0(lat.o_hat()) == perp.sub.lattice.o_hat()


def test_perp_respects_products(perp, w31_q2):
    alg = w31_q2
    objects = [
        alg.ket(alg.lvec(0)),
        alg.ket(alg.exceptional(1, 1, 1)),
        alg.ket(alg.exceptional(1, 0, 2)),
    ]
    for x in objects:
        for y in objects:
            assert perp.pull_elt(x * y) == perp.pull_elt(x) * perp.pull_elt(y)


def test_transported_generators(perp, w31_q2):
    gens = GeneratorSet(w31_q2, 1)
    moved = TransportedGenerators(gens, perp)
    assert moved.B(STAR, 1) == perp.sub.ket(perp.sub.lvec(1))
    assert moved.alpha(STAR) == perp.sub.lattice.o_hat()
    assert moved.cartan(STAR, Vertex(1, 1)) == -1
    assert relation_vertices_in_perp([STAR, Vertex(1, 1)])
    assert not relation_vertices_in_perp([Vertex(1, 2)])


def test_element_roundtrip(perp, w31_q2):
    alg = w31_q2
    elt = alg.ket(alg.exceptional(1, 1, 1)) * alg.ket(alg.exceptional(1, 0, 2))
    assert perp.contains_elt(elt)
    assert perp.push_elt(perp.pull_elt(elt)) == elt
    assert not perp.contains_elt(alg.ket(alg.exceptional(1, 2, 1)))
