import time
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from app.algebra.generators import GeneratorSet, RelationTerms, STAR, Vertex
from app.algebra.ihallcore import HallAlgebra, HallElt
from app.algebra.lattice import K0Class
from app.algebra.transport import (
    P1Embedding,
    PerpendicularTransport,
    TransportedGenerators,
    relation_vertices_in_perp,
)
from app.core.exceptions import CapExceededError, TransportError, UnsupportedSectorError
from app.core.logger import setup_logger
from app.schemas.report import (
    BOOTSTRAP_ONLY,
    CONSUMED,
    FAILS,
    HOLDS,
    NATIVE,
    P1_IMAGE,
    PERPENDICULAR,
    SKIPPED,
    RelationInstance,
    RelationRecord,
)

logger = setup_logger(__name__)

# 计算中可恢复的错误, 记为跳过
RECOVERABLE = (UnsupportedSectorError, CapExceededError, TransportError)

PARAM_NAMES: Dict[str, Tuple[str, ...]] = {
    "iDR1b": ("m", "n"),
    "iDR2": ("m", "l"),
    "hB1": ("m", "l"),
    "iDR3a": ("k", "l"),
    "iDR3b": ("k", "l"),
    "iDR4": ("k", "l"),
    "iDR5": ("k1", "k2", "l"),
}

Sides = Tuple[HallElt, HallElt]
Target = Tuple[str, Vertex, int]


def _idr1b(gens, mu: Vertex, nu: Vertex, p: Dict[str, int]) -> Sides:
    alg = gens.algebra
    return alg.bracket(gens.H(mu, p["m"]), gens.H(nu, p["n"])), alg.zero()


def _idr2(gens, mu: Vertex, nu: Vertex, p: Dict[str, int]) -> Sides:
    """[H_{μ,m}, B_{ν,l}] = ([m c]/m)(B_{ν,l+m} - B_{ν,l-m}C^m)"""
    alg, qf = gens.algebra, gens.qf
    m, l = p["m"], p["l"]
    c = gens.cartan(mu, nu)
    lhs = alg.bracket(gens.H(mu, m), gens.B(nu, l))
    if c == 0:
        return lhs, alg.zero()
    coeff = qf.quantum_int(m * c) / m
    rhs = gens.B(nu, l + m) - gens.B(nu, l - m).shift(gens.delta(m))
    return lhs, rhs.scale(coeff)


def _hb1(gens, mu: Vertex, nu: Vertex, p: Dict[str, int]) -> Sides:
    alg = gens.algebra
    v = gens.qf.v_power
    m, l = p["m"], p["l"]
    c = gens.cartan(mu, nu)
    lhs = alg.bracket(gens.Theta(mu, m), gens.B(nu, l))
    lhs = lhs + alg.bracket(gens.Theta(mu, m - 2), gens.B(nu, l)).shift(gens.delta())
    rhs = alg.bracket(gens.Theta(mu, m - 1), gens.B(nu, l + 1), v(-2 * c)).scale(v(c))
    rhs = rhs + alg.bracket(gens.Theta(mu, m - 1), gens.B(nu, l - 1), v(2 * c)).scale(v(-c)).shift(gens.delta())
    return lhs, rhs


def _idr4(gens, mu: Vertex, nu: Vertex, p: Dict[str, int]) -> Sides:
    alg = gens.algebra
    return alg.bracket(gens.B(mu, p["k"]), gens.B(nu, p["l"])), alg.zero()


def _idr3a(gens, mu: Vertex, nu: Vertex, p: Dict[str, int]) -> Sides:
    alg = gens.algebra
    v = gens.qf.v_power
    k, l = p["k"], p["l"]
    c = gens.cartan(mu, nu)
    lhs = alg.bracket(gens.B(mu, k), gens.B(nu, l + 1), v(-c))
    lhs = lhs - alg.bracket(gens.B(mu, k + 1), gens.B(nu, l), v(c)).scale(v(-c))
    return lhs, alg.zero()


def _idr3b(gens, mu: Vertex, nu: Vertex, p: Dict[str, int]) -> Sides:
    alg = gens.algebra
    v = gens.qf.v_power
    k, l = p["k"], p["l"]
    lhs = alg.bracket(gens.B(mu, k), gens.B(mu, l + 1), v(-2))
    lhs = lhs - alg.bracket(gens.B(mu, k + 1), gens.B(mu, l), v(2)).scale(v(-2))
    return lhs, gens.theta_rhs(mu, k, l)


def _idr5(gens, mu: Vertex, nu: Vertex, p: Dict[str, int]) -> Sides:
    return gens.serre_terms(p["k1"], p["k2"], p["l"], mu, nu)


TEMPLATES: Dict[str, Callable] = {
    "iDR1b": _idr1b,
    "iDR2": _idr2,
    "hB1": _hb1,
    "iDR3a": _idr3a,
    "iDR3b": _idr3b,
    "iDR4": _idr4,
    "iDR5": _idr5,
}


class PerturbedGenerators(RelationTerms):
    """把某个生成元第 term 项的系数乘 2 的生成元表, 用于检验校验器的灵敏度"""

    def __init__(self, base, kind: str, mu: Vertex, index: int, term: int = 0):
        self.base = base
        self.target = (kind, mu, index)
        self.term = term
        self.algebra = base.algebra
        self.qf = base.qf
        self.q = base.q
        self.lattice = base.lattice

    def _perturb(self, kind: str, mu: Vertex, index: int, elt: HallElt) -> HallElt:
        items = elt.items()
        if (kind, mu, index) != self.target or self.term >= len(items):
            return elt
        terms = dict(items)
        key, coeff = items[self.term]
        terms[key] = coeff * 2
        return HallElt(self.algebra, terms)

    def cartan(self, mu: Vertex, nu: Vertex) -> int:
        return self.base.cartan(mu, nu)

    def alpha(self, mu: Vertex) -> K0Class:
        return self.base.alpha(mu)

    def delta(self, k: int = 1) -> K0Class:
        return self.base.delta(k)

    def B(self, mu: Vertex, l: int) -> HallElt:
        return self._perturb("B", mu, l, self.base.B(mu, l))

    def Theta(self, mu: Vertex, m: int) -> HallElt:
        return self._perturb("Theta", mu, m, self.base.Theta(mu, m))

    def H(self, mu: Vertex, m: int) -> HallElt:
        return self._perturb("H", mu, m, self.base.H(mu, m))


class VerifierService:
    """关系实例的检验

    依次尝试原生计算, P¹ 像, 以及权重 (2,1) 的正交子范畴模型
    """

    def __init__(self, generators: GeneratorSet, max_index: Optional[int] = None):
        self.logger = logger
        self.generators = generators
        self.algebra: HallAlgebra = generators.algebra
        self.max_index = max_index if max_index is not None else generators.max_index
        self._p1: Optional[Tuple[P1Embedding, GeneratorSet]] = None
        self._perp: Optional[TransportedGenerators] = None

    # ---- 求值方式 ----

    def _p1_generators(self) -> Tuple[P1Embedding, GeneratorSet]:
        if self._p1 is None:
            embedding = P1Embedding(self.algebra)
            self._p1 = (embedding, GeneratorSet(embedding.source, self.generators.max_index))
        return self._p1

    def _perp_generators(self) -> TransportedGenerators:
        if self._perp is None:
            self._perp = TransportedGenerators(self.generators, PerpendicularTransport(self.algebra))
        return self._perp

    def evaluators(self, mu: Vertex, nu: Vertex) -> Iterator[Tuple[str, object]]:
        yield NATIVE, self.generators
        weights = self.algebra.weights
        if mu.is_star and nu.is_star and any(p > 1 for p in weights):
            yield P1_IMAGE, self._p1_generators()[1]
        sub_weights = (2,) + (1,) * (len(weights) - 1)
        if weights[0] >= 2 and tuple(weights) != sub_weights and relation_vertices_in_perp([mu, nu]):
            yield PERPENDICULAR, self._perp_generators()

    # ---- 单个实例 ----

    def params_key(self, inst: RelationInstance) -> Tuple[int, ...]:
        return tuple(inst.params[name] for name in PARAM_NAMES[inst.relation])

    def is_consumed(self, inst: RelationInstance) -> bool:
        mu, nu = Vertex.parse(inst.mu), Vertex.parse(inst.nu)
        return self.generators.is_consumed(inst.relation, mu, nu, self.params_key(inst))

    def bootstrap_only(self, inst: RelationInstance) -> bool:
        """涉及 Ĥ_{[i,j],m} (j>=2, m>=2), 这些元素只由递推给出, 没有独立闭式"""
        if inst.relation == "iDR2":
            pairs = [(inst.mu, inst.params["m"])]
        elif inst.relation == "iDR1b":
            pairs = [(inst.mu, inst.params["m"]), (inst.nu, inst.params["n"])]
        else:
            return False
        return any(
            not mu.is_star and mu.index >= 2 and m >= 2
            for mu, m in ((Vertex.parse(text), m) for text, m in pairs)
        )

    def residual(self, gens, inst: RelationInstance) -> HallElt:
        mu, nu = Vertex.parse(inst.mu), Vertex.parse(inst.nu)
        lhs, rhs = TEMPLATES[inst.relation](gens, mu, nu, inst.params)
        return lhs - rhs

    def check_relation(self, inst: RelationInstance) -> RelationRecord:
        start = time.perf_counter()
        if self.is_consumed(inst):
            return RelationRecord(instance=inst, status=CONSUMED, reason="生成元递推已使用")
        mu, nu = Vertex.parse(inst.mu), Vertex.parse(inst.nu)
        reasons: List[str] = []
        for mode, gens in self.evaluators(mu, nu):
            try:
                residual = self.residual(gens, inst)
            except RECOVERABLE as e:
                reasons.append(f"{mode}: {e.message}")
                self.logger.info(f"{inst.label()} 在 {mode} 下无法计算: {e.message}")
                continue
            done = inst.copy(update={"transport": mode})
            if mode != NATIVE:
                self.logger.info(f"{inst.label()} 通过 {mode} 计算")
            elapsed = time.perf_counter() - start
            if residual.is_zero:
                return RelationRecord(instance=done, status=HOLDS, elapsed=elapsed)
            self.logger.warning(f"{inst.label()} 不成立")
            reason = BOOTSTRAP_ONLY if self.bootstrap_only(inst) else None
            return RelationRecord(instance=done, status=FAILS, residual=residual.dump(), reason=reason, elapsed=elapsed)
        return RelationRecord(
            instance=inst, status=SKIPPED, reason="; ".join(reasons), elapsed=time.perf_counter() - start
        )

    def check_all(self, instances: List[RelationInstance]) -> List[RelationRecord]:
        records = [self.check_relation(inst) for inst in instances]
        # 后续计算可能触发新的递推, 最后统一标记
        out = []
        for record in records:
            if record.status in (HOLDS, FAILS) and self.is_consumed(record.instance):
                record = record.copy(update={"status": CONSUMED, "reason": "生成元递推已使用"})
            out.append(record)
        return out

    # ---- 网格 ----

    @staticmethod
    def instance(relation: str, mu: Vertex, nu: Vertex, **params) -> RelationInstance:
        return RelationInstance(relation=relation, mu=mu.render(), nu=nu.render(), params=params)

    def _diagonal(self, mu: Vertex, l_range: range) -> List[RelationInstance]:
        n = self.max_index
        out = []
        for m in range(1, n + 1):
            for m2 in range(m + 1, n + 1):
                out.append(self.instance("iDR1b", mu, mu, m=m, n=m2))
        for m in range(1, n + 1):
            for l in l_range:
                out.append(self.instance("iDR2", mu, mu, m=m, l=l))
                out.append(self.instance("hB1", mu, mu, m=m, l=l))
        for k in range(-1, 2):
            for l in range(-1, 2):
                out.append(self.instance("iDR3b", mu, mu, k=k, l=l))
        return out

    def _pair(self, mu: Vertex, nu: Vertex) -> List[RelationInstance]:
        """μ != ν, 两个方向都生成"""
        n = self.max_index
        c = self.generators.cartan(mu, nu)
        out = []
        for m in range(1, n + 1):
            for m2 in range(1, n + 1):
                out.append(self.instance("iDR1b", mu, nu, m=m, n=m2))
        for a, b in ((mu, nu), (nu, mu)):
            for m in range(1, n + 1):
                for l in range(-1, 2):
                    out.append(self.instance("iDR2", a, b, m=m, l=l))
            if c == 0:
                for k in range(-1, 2):
                    for l in range(-1, 2):
                        out.append(self.instance("iDR4", a, b, k=k, l=l))
                continue
            for m in range(1, n + 1):
                out.append(self.instance("hB1", a, b, m=m, l=0))
            for k in range(-1, 2):
                for l in range(-1, 2):
                    out.append(self.instance("iDR3a", a, b, k=k, l=l))
            for k1, k2 in ((0, 0), (0, 1), (1, 1)):
                for l in (-1, 0):
                    out.append(self.instance("iDR5", a, b, k1=k1, k2=k2, l=l))
        return out

    def relation_grid(self, scope: str) -> List[RelationInstance]:
        """scope: star / tube / mixed / all"""
        verts = self.generators.vertices()
        branch = [mu for mu in verts if not mu.is_star]
        out: List[RelationInstance] = []
        if scope in ("star", "all"):
            out.extend(self._diagonal(STAR, range(-(self.max_index - 1), self.max_index)))
        if scope in ("tube", "all"):
            for mu in branch:
                out.extend(self._diagonal(mu, range(-self.max_index, self.max_index + 1)))
            for a, mu in enumerate(branch):
                for nu in branch[a + 1:]:
                    out.extend(self._pair(mu, nu))
        if scope in ("mixed", "all"):
            for mu in branch:
                out.extend(self._pair(STAR, mu))
        return out

    # ---- 阴性对照 ----

    def _zero_cartan_pair(self) -> Optional[Tuple[Vertex, Vertex]]:
        """Cartan 矩阵元为 0 的顶点对, 含 ⋆ 的优先"""
        verts = self.generators.vertices()
        pairs = [(mu, nu) for a, mu in enumerate(verts) for nu in verts[a + 1:] if self.generators.cartan(mu, nu) == 0]
        pairs.sort(key=lambda pair: not pair[0].is_star)
        return pairs[0] if pairs else None

    def negative_controls(self) -> List[Tuple[RelationInstance, List[Target], bool]]:
        """(实例, 依次尝试扰动的生成元, 残差是否必须改变)

        不同管中的挠层, 以及同一齐次管中的挠层, 乘积可交换, 对这些实例单项扰动不一定改变残差
        """
        out = [
            (self.instance("iDR2", STAR, STAR, m=1, l=0), [("B", STAR, 1)], True),
            (self.instance("hB1", STAR, STAR, m=1, l=0), [("B", STAR, 1)], True),
            (self.instance("iDR3b", STAR, STAR, k=0, l=0), [("Theta", STAR, 1)], True),
            (self.instance("iDR1b", STAR, STAR, m=1, n=2), [("H", STAR, 1), ("H", STAR, 2)], False),
        ]
        if self.algebra.weights[0] >= 2:
            s11 = Vertex(1, 1)
            out.append((self.instance("iDR3a", STAR, s11, k=0, l=0), [("B", STAR, 1)], True))
            out.append((self.instance("iDR5", s11, STAR, k1=0, k2=0, l=0), [("B", s11, 0)], True))
            out.append((self.instance("iDR1b", STAR, s11, m=1, n=1), [("H", s11, 1), ("H", STAR, 1)], False))
        pair = self._zero_cartan_pair()
        if pair is not None:
            mu, nu = pair
            out.append((self.instance("iDR4", mu, nu, k=0, l=1), [("B", nu, 1), ("B", mu, 0)], mu.is_star))
        return out

    def _perturbed_residual(self, gens, inst: RelationInstance, targets: List[Target]) -> Optional[str]:
        """返回第一个使残差非零的扰动, 都不改变时返回 None"""
        for kind, mu, index in targets:
            n_terms = len(getattr(gens, kind)(mu, index).items())
            for term in range(n_terms):
                residual = self.residual(PerturbedGenerators(gens, kind, mu, index, term), inst)
                if not residual.is_zero:
                    return f"{kind}({mu.render()},{index})#{term}"
        return None

    def check_negative(self) -> List[RelationRecord]:
        records = []
        for inst, targets, must_move in self.negative_controls():
            label = inst.copy(update={"relation": f"negative:{inst.relation}"})
            tried = ", ".join(f"{kind}({mu.render()},{index})" for kind, mu, index in targets)
            errors = []
            record = None
            for mode, gens in self.evaluators(Vertex.parse(inst.mu), Vertex.parse(inst.nu)):
                try:
                    moved = self._perturbed_residual(gens, inst, targets)
                except RECOVERABLE as e:
                    errors.append(f"{mode}: {e.message}")
                    continue
                done = label.copy(update={"transport": mode})
                if moved is not None:
                    record = RelationRecord(instance=done, status=HOLDS, reason=f"扰动 {moved} 后残差非零")
                elif not must_move:
                    record = RelationRecord(instance=done, status=SKIPPED, reason=f"逐项扰动 {tried} 均不改变残差")
                else:
                    record = RelationRecord(instance=done, status=FAILS, reason=f"逐项扰动 {tried} 后残差仍为零")
                break
            if record is None:
                record = RelationRecord(instance=label, status=SKIPPED, reason="; ".join(errors))
            records.append(record)
        if self._zero_cartan_pair() is None:
            records.append(RelationRecord(
                instance=RelationInstance(relation="negative:iDR4"),
                status=SKIPPED,
                reason="没有 Cartan 矩阵元为 0 的顶点对",
            ))
        return records
