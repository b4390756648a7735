from typing import List, Sequence

from app.algebra.generators import GeneratorSet, RelationTerms, Vertex
from app.algebra.ihallcore import CohClass, HallAlgebra, HallElt
from app.algebra.lattice import K0Class, LVec
from app.algebra.tube import TorsionClass
from app.core.exceptions import ConfigError, TransportError
from app.core.logger import setup_logger

logger = setup_logger(__name__)


class P1Embedding:
    """coh P¹ -> coh X: O(l) ↦ O(lc), S_{λ_i}^{(r)} ↦ S_{i,0}^{(r·p_i)}, 其余点不变"""

    def __init__(self, target: HallAlgebra):
        self.target = target
        data = target.data
        self.source = HallAlgebra(target.q, (1,) * data.t, data.lambdas)

    def lvec(self, x: LVec) -> LVec:
        return self.target.lattice.lvec(x.l)

    def torsion(self, tors: TorsionClass) -> TorsionClass:
        point = self.target.line.point_of_poly(tors.point.poly)
        tube = self.target.atlas.tube(point)
        return tube.make([(0, length * tube.n) for _, length in tors.parts])

    def coh(self, coh: CohClass) -> CohClass:
        return CohClass.build([self.lvec(x) for x in coh.lines], [self.torsion(t) for t in coh.torsion])

    def k0(self, alpha: K0Class) -> K0Class:
        lat = self.target.lattice
        return lat.o_hat() * alpha.coords[0] + lat.delta() * alpha.coords[1]

    def push(self, elt: HallElt) -> HallElt:
        terms = {}
        for (coh, alpha), coeff in elt.terms.items():
            key = (self.coh(coh), self.k0(alpha))
            terms[key] = terms.get(key, self.target.qf.zero) + coeff
        return HallElt(self.target, terms)


class PerpendicularTransport:
    """⊥𝒮 ≅ coh Y, Y 的权重为 (2,1,...,1)

    𝒮 = {S_{1,j}: 2<=j<=p_1-1} ∪ {S_{i,j}: i>=2, 1<=j<=p_i-1}
    """

    def __init__(self, ambient: HallAlgebra):
        data = ambient.data
        if data.weights[0] < 2:
            raise ConfigError("第一个例外点的权重至少为 2 才能约化")
        self.ambient = ambient
        self.p1 = data.weights[0]
        self.sub = HallAlgebra(ambient.q, (2,) + (1,) * (data.t - 1), data.lambdas)

    # ---- 正交性 ----

    def forbidden(self, branch: int) -> List[int]:
        p = self.ambient.weights[branch - 1]
        start = 2 if branch == 1 else 1
        return list(range(start, p))

    def line_in_perp(self, x: LVec) -> bool:
        return x.a[0] in (0, 1) and not any(x.a[1:])

    def torsion_in_perp(self, tors: TorsionClass) -> bool:
        if not tors.point.is_exceptional:
            return True
        tube = self.ambient.atlas.tube(tors.point)
        return tube.left_perpendicular(tors, self.forbidden(tors.point.branch))

    def contains(self, coh: CohClass) -> bool:
        return all(self.line_in_perp(x) for x in coh.lines) and all(self.torsion_in_perp(t) for t in coh.torsion)

    def contains_elt(self, elt: HallElt) -> bool:
        return all(self.contains(coh) for coh, _ in elt.terms)

    # ---- X -> Y ----

    def _pull_line(self, x: LVec) -> LVec:
        if not self.line_in_perp(x):
            raise TransportError(f"O({x.render()}) 不在 ⊥𝒮 中")
        a = [x.a[0]] + [0] * (len(x.a) - 1)
        return self.sub.lattice.lvec(x.l, a)

    def _pull_torsion(self, tors: TorsionClass) -> TorsionClass:
        if not self.torsion_in_perp(tors):
            raise TransportError(f"{tors.render()} 不在 ⊥𝒮 中")
        point = tors.point
        if not point.is_exceptional:
            return self.sub.atlas.tube(self.sub.line.point_of_poly(point.poly)).make(tors.parts)
        p = self.ambient.weights[point.branch - 1]
        target = self.sub.atlas.tube(self.sub.line.branch_point(point.branch))
        parts = []
        for top, length in tors.parts:
            if point.branch != 1:
                parts.append((0, length // p))
            elif top == 1:
                b, e = divmod(length, p)
                parts.append((1, 2 * b + e))
            else:
                e = 1 if length % p else 0
                a = (length + e) // p
                parts.append((0, 2 * a - e))
        return target.make(parts)

    def pull(self, coh: CohClass) -> CohClass:
        return CohClass.build([self._pull_line(x) for x in coh.lines], [self._pull_torsion(t) for t in coh.torsion])

    def pull_k0(self, alpha: K0Class) -> K0Class:
        amb = self.ambient.lattice
        rest = alpha - amb.o_hat() * alpha.coords[0] - amb.delta() * alpha.coords[1]
        s11 = amb.s_coordinate(alpha, 1, 1)
        rest = rest - amb.s_hat(1, 1) * s11
        if not rest.is_zero:
            raise TransportError(f"K0 类 {amb.render(alpha)} 不在 ⊥𝒮 的像中")
        lat = self.sub.lattice
        return lat.o_hat() * alpha.coords[0] + lat.delta() * alpha.coords[1] + lat.s_hat(1, 1) * s11

    def pull_elt(self, elt: HallElt) -> HallElt:
        terms = {}
        for (coh, alpha), coeff in elt.terms.items():
            key = (self.pull(coh), self.pull_k0(alpha))
            terms[key] = terms.get(key, self.sub.qf.zero) + coeff
        return HallElt(self.sub, terms)

    # ---- Y -> X ----

    def _push_line(self, y: LVec) -> LVec:
        a = [y.a[0]] + [0] * (len(y.a) - 1)
        return self.ambient.lattice.lvec(y.l, a)

    def _push_torsion(self, tors: TorsionClass) -> TorsionClass:
        point = self.ambient.line.point_of_poly(tors.point.poly)
        tube = self.ambient.atlas.tube(point)
        if not point.is_exceptional:
            return tube.make(tors.parts)
        p = tube.n
        parts = []
        for top, length in tors.parts:
            if point.branch != 1:
                parts.append((0, length * p))
            elif top == 1:
                b, e = divmod(length, 2)
                parts.append((1, b * p + e))
            else:
                a, e = (length + 1) // 2, length % 2
                parts.append((0, a * p - e))
        return tube.make(parts)

    def push(self, coh: CohClass) -> CohClass:
        return CohClass.build([self._push_line(y) for y in coh.lines], [self._push_torsion(t) for t in coh.torsion])

    def push_k0(self, alpha: K0Class) -> K0Class:
        lat = self.ambient.lattice
        s11 = alpha.coords[2] if len(alpha.coords) > 2 else 0
        return lat.o_hat() * alpha.coords[0] + lat.delta() * alpha.coords[1] + lat.s_hat(1, 1) * s11

    def push_elt(self, elt: HallElt) -> HallElt:
        terms = {}
        for (coh, alpha), coeff in elt.terms.items():
            key = (self.push(coh), self.push_k0(alpha))
            terms[key] = terms.get(key, self.ambient.qf.zero) + coeff
        return HallElt(self.ambient, terms)


class TransportedGenerators(RelationTerms):
    """把生成元搬到 Y 上计算, 接口与 GeneratorSet 一致"""

    def __init__(self, generators: GeneratorSet, transport: PerpendicularTransport):
        self.base = generators
        self.transport = transport
        self.algebra = transport.sub
        self.qf = self.algebra.qf
        self.q = self.algebra.q
        self.lattice = self.algebra.lattice

    def cartan(self, mu: Vertex, nu: Vertex) -> int:
        return self.base.cartan(mu, nu)

    def alpha(self, mu: Vertex) -> K0Class:
        return self.transport.pull_k0(self.base.alpha(mu))

    def delta(self, k: int = 1) -> K0Class:
        return self.lattice.delta() * k

    def K(self, mu: Vertex) -> HallElt:
        return self.algebra.torus(self.alpha(mu))

    def C(self, k: int = 1) -> HallElt:
        return self.algebra.torus(self.delta(k))

    def B(self, mu: Vertex, l: int) -> HallElt:
        return self.transport.pull_elt(self.base.B(mu, l))

    def Theta(self, mu: Vertex, m: int) -> HallElt:
        return self.transport.pull_elt(self.base.Theta(mu, m))

    def H(self, mu: Vertex, m: int) -> HallElt:
        return self.transport.pull_elt(self.base.H(mu, m))


def relation_vertices_in_perp(vertices: Sequence[Vertex]) -> bool:
    """约化只处理 ⋆ 与 [1,1]"""
    return all(mu.is_star or (mu.branch, mu.index) == (1, 1) for mu in vertices)
