from dataclasses import dataclass
from fractions import Fraction
import threading
from typing import Dict, List, Optional, Sequence, Set, Tuple

from app.algebra.groundfield import PointId
from app.algebra.ihallcore import CohClass, HallAlgebra, HallElt
from app.algebra.lattice import K0Class
from app.algebra.tube import TorsionClass, partitions
from app.core.config import settings
from app.core.exceptions import CapExceededError, ConfigError
from app.core.logger import setup_logger

logger = setup_logger(__name__)

B_KIND = "B"
THETA_KIND = "Theta"
H_KIND = "H"
KINDS = (B_KIND, THETA_KIND, H_KIND)


@dataclass(frozen=True, order=True)
class Vertex:
    """星形图的顶点, branch=0 表示中心点 ⋆"""
    branch: int = 0
    index: int = 0

    @property
    def is_star(self) -> bool:
        return self.branch == 0

    def render(self) -> str:
        return "star" if self.is_star else f"[{self.branch},{self.index}]"

    @classmethod
    def parse(cls, text: str) -> "Vertex":
        text = text.strip().strip("[]")
        if text in ("star", "*", "⋆"):
            return STAR
        try:
            i, j = (int(x) for x in text.split(","))
        except ValueError:
            raise ConfigError(f"无法解析顶点: {text}")
        return cls(i, j)


STAR = Vertex(0, 0)

# 被生成过程消耗的关系实例: (关系, μ, ν, 参数)
Instance = Tuple[str, Vertex, Vertex, Tuple[int, ...]]


def theta_to_h(algebra: HallAlgebra, thetas: Sequence[HallElt]) -> List[HallElt]:
    """由 Θ_1..Θ_N 求 H_1..H_N

    1 + Σ (v-v^{-1})Θ_m u^m = exp((v-v^{-1}) Σ H_m u^m)
    """
    qf = algebra.qf
    gap = qf.v_minus_inverse()
    a = [algebra.one()] + [t.scale(gap) for t in thetas]
    h: List[HallElt] = [algebra.zero()]
    for m in range(1, len(a)):
        acc = a[m]
        for k in range(1, m):
            acc = acc - (h[k] * a[m - k]).scale(Fraction(k, m))
        h.append(acc)
    return [x.scale(gap.inverse()) for x in h[1:]]


def h_to_theta(algebra: HallAlgebra, hs: Sequence[HallElt]) -> List[HallElt]:
    """theta_to_h 的逆: m·a_m = Σ_{k=1}^{m} k·h_k·a_{m-k}"""
    qf = algebra.qf
    gap = qf.v_minus_inverse()
    h = [algebra.zero()] + [x.scale(gap) for x in hs]
    a: List[HallElt] = [algebra.one()]
    for m in range(1, len(h)):
        acc = algebra.zero()
        for k in range(1, m + 1):
            acc = acc + (h[k] * a[m - k]).scale(Fraction(k, m))
        a.append(acc)
    return [x.scale(gap.inverse()) for x in a[1:]]


class RelationTerms:
    """由 B/Θ/alpha/delta 拼出的关系两端, 子类提供生成元表"""

    algebra: HallAlgebra

    def theta_rhs(self, mu: Vertex, k: int, l: int) -> HallElt:
        """iDR3b 右端乘以 (1-q)²"""
        v = self.qf.v_power
        a = self.alpha(mu)
        total = self.Theta(mu, l - k + 1).shift(self.delta(k) + a).scale(v(-2))
        total = total - self.Theta(mu, l - k - 1).shift(self.delta(k + 1) + a).scale(v(-4))
        total = total + self.Theta(mu, k - l + 1).shift(self.delta(l) + a).scale(v(-2))
        total = total - self.Theta(mu, k - l - 1).shift(self.delta(l + 1) + a).scale(v(-4))
        return total.scale((1 - self.q) ** 2)

    def _s_term(self, k1: int, k2: int, l: int, mu: Vertex, nu: Vertex) -> HallElt:
        b1, b2, bn = self.B(mu, k1), self.B(mu, k2), self.B(nu, l)
        two = self.qf.quantum_int(2)
        return b1 * b2 * bn - (b1 * bn * b2).scale(two) + bn * b1 * b2

    def _r_term(self, k1: int, k2: int, l: int, mu: Vertex, nu: Vertex) -> HallElt:
        alg = self.algebra
        v = self.qf.v_power
        two = self.qf.quantum_int(2)
        d = k2 - k1
        total = alg.zero()
        p = 0
        while d - 2 * p - 1 >= 0:
            term = alg.bracket(self.Theta(mu, d - 2 * p - 1), self.B(nu, l - 1), v(-2))
            total = total - term.shift(self.delta(p + 1)).scale(v(2 * p) * two)
            p += 1
        p = 1
        while d - 2 * p >= 0:
            term = alg.bracket(self.B(nu, l), self.Theta(mu, d - 2 * p), v(-2))
            total = total - term.shift(self.delta(p)).scale(v(2 * p - 1) * two)
            p += 1
        total = total - alg.bracket(self.B(nu, l), self.Theta(mu, d), v(-2))
        return total.shift(self.delta(k1) + self.alpha(mu))

    def serre_terms(self, k1: int, k2: int, l: int, mu: Vertex, nu: Vertex) -> Tuple[HallElt, HallElt]:
        """返回 (Ŝ, (1-q)²R̂)"""
        lhs = self._s_term(k1, k2, l, mu, nu)
        rhs = self._r_term(k1, k2, l, mu, nu)
        if k1 != k2:
            lhs = lhs + self._s_term(k2, k1, l, mu, nu)
            rhs = rhs + self._r_term(k2, k1, l, mu, nu)
        return lhs, rhs.scale((1 - self.q) ** 2)


class GeneratorSet(RelationTerms):
    """Drinfeld 型生成元在 ıHall 代数中的像

    ⋆ 处的生成元用闭式给出; 分支顶点 [i,j] 由种子 B_0, B_{-1}, Θ_1 出发,
    用 iDR2 (m=1) 与 iDR3b (k=0) 递推得到, 用到的关系实例记录在 consumed 中
    """

    def __init__(self, algebra: HallAlgebra, max_index: Optional[int] = None, index_cap: Optional[int] = None):
        self.algebra = algebra
        self.qf = algebra.qf
        self.lattice = algebra.lattice
        self.q = algebra.q
        self.max_index = max_index if max_index is not None else settings.MAX_INDEX
        self.index_cap = index_cap if index_cap is not None else 3 * self.max_index + 1
        self._b: Dict[Tuple[Vertex, int], HallElt] = {}
        self._theta: Dict[Tuple[Vertex, int], HallElt] = {}
        self._h: Dict[Tuple[Vertex, int], HallElt] = {}
        self.consumed: Set[Instance] = set()
        self._lock = threading.RLock()

    # ---- 星形图 ----

    def vertices(self) -> List[Vertex]:
        out = [STAR]
        for i, p in enumerate(self.algebra.weights, start=1):
            for j in range(1, p):
                out.append(Vertex(i, j))
        return out

    def check_vertex(self, mu: Vertex) -> Vertex:
        if mu not in self.vertices():
            raise ConfigError(f"权重 {self.algebra.weights} 下不存在顶点 {mu.render()}")
        return mu

    def cartan(self, mu: Vertex, nu: Vertex) -> int:
        if mu == nu:
            return 2
        if mu.is_star or nu.is_star:
            other = nu if mu.is_star else mu
            return -1 if other.index == 1 else 0
        if mu.branch == nu.branch and abs(mu.index - nu.index) == 1:
            return -1
        return 0

    # ---- 环面元 ----

    def alpha(self, mu: Vertex) -> K0Class:
        if mu.is_star:
            return self.lattice.o_hat()
        return self.lattice.s_hat(mu.branch, mu.index)

    def delta(self, k: int = 1) -> K0Class:
        return self.lattice.delta() * k

    def K(self, mu: Vertex) -> HallElt:
        return self.algebra.torus(self.alpha(mu))

    def C(self, k: int = 1) -> HallElt:
        return self.algebra.torus(self.delta(k))

    # ---- 统一入口 ----

    def get(self, kind: str, mu: Vertex, index: int) -> HallElt:
        if kind == B_KIND:
            return self.B(mu, index)
        if kind == THETA_KIND:
            return self.Theta(mu, index)
        if kind == H_KIND:
            return self.H(mu, index)
        raise ConfigError(f"未知的生成元类型: {kind}")

    def _check_index(self, index: int):
        if abs(index) > self.index_cap:
            raise CapExceededError(f"生成元下标 {index} 超出上限 {self.index_cap}")

    def B(self, mu: Vertex, l: int) -> HallElt:
        self._check_index(l)
        with self._lock:
            key = (mu, l)
            if key not in self._b:
                self.check_vertex(mu)
                if mu.is_star:
                    self._b[key] = self.algebra.ket(self.lattice.lvec(l))
                else:
                    self._b[key] = self._branch_b(mu, l)
            return self._b[key]

    def Theta(self, mu: Vertex, m: int) -> HallElt:
        if m < 0:
            return self.algebra.zero()
        if m == 0:
            return self.algebra.one().scale(self.qf.theta_zero())
        self._check_index(m)
        with self._lock:
            key = (mu, m)
            if key not in self._theta:
                self.check_vertex(mu)
                if mu.is_star:
                    self._theta[key] = self.theta_star(m)
                elif m == 1:
                    self._theta[key] = self.theta_branch_one(mu)
                else:
                    self._theta[key] = self._branch_theta(mu, m)
            return self._theta[key]

    def H(self, mu: Vertex, m: int) -> HallElt:
        if m < 1:
            raise ConfigError(f"H 的下标必须为正: {m}")
        self._check_index(m)
        with self._lock:
            key = (mu, m)
            if key not in self._h:
                self.check_vertex(mu)
                if mu.is_star:
                    self._h[key] = self.h_star(m)
                else:
                    thetas = [self.Theta(mu, r) for r in range(1, m + 1)]
                    for r, h in enumerate(theta_to_h(self.algebra, thetas), start=1):
                        self._h.setdefault((mu, r), h)
            return self._h[key]

    def dump(self, kind: str, mu: Vertex, index: int) -> str:
        return self.get(kind, mu, index).dump()

    # ---- ⋆ 处的闭式 ----

    def theta_star(self, m: int, s: int = 0) -> HallElt:
        """(1/((q-1)²v^{m-1})) Σ_{0≠f: O(sc)→O((m+s)c)} [coker f]"""
        if m < 0:
            return self.algebra.zero()
        if m == 0:
            return self.algebra.one().scale(self.qf.theta_zero())
        lat = self.lattice
        return self._cokernel_sum(lat.lvec(s), lat.lvec(m + s), m)

    def theta_star_pm(self, sign: int, m: int, s: int = 0) -> HallElt:
        """Θ^+ 取 O(sc)→O((m+s)c+x_1), Θ^- 取 O(sc+x_1)→O((m+s)c)"""
        if m < 0:
            return self.algebra.zero()
        lat = self.lattice
        x1 = lat.x_vector(1)
        if sign > 0:
            return self._cokernel_sum(lat.lvec(s), lat.lvec(m + s) + x1, m)
        return self._cokernel_sum(lat.lvec(s) + x1, lat.lvec(m + s), m)

    def _cokernel_sum(self, source, target, m: int) -> HallElt:
        alg = self.algebra
        result = alg.zero()
        for coker, count in alg.bundles.cokernel_counts(source, target).items():
            result = result + alg.basis(CohClass.build((), coker)).scale(count)
        factor = (self.qf.of((self.q - 1) ** 2) * self.qf.v_power(m - 1)).inverse()
        return result.scale(factor)

    def points_dividing(self, m: int) -> List[PointId]:
        return [x for x in self.algebra.line.closed_points(m) if m % x.degree == 0]

    def _point_sum(self, x: PointId, m: int) -> HallElt:
        """([m]/m)·d_x·Σ_{|λ|=m/d_x} n_x(ℓ(λ)-1)·[S_x^{(λ)}]/|Aut|"""
        alg = self.algebra
        tube = alg.atlas.tube(x)
        d = x.degree
        result = alg.zero()
        for lam in partitions(m // d):
            coh = CohClass.build((), [tube.partition_class(lam)])
            coeff = self.qf.n_factor(len(lam) - 1, d) * Fraction(1, alg.aut_order(coh))
            result = result + alg.basis(coh).scale(coeff)
        return result.scale(self.qf.quantum_int(m) * Fraction(d, m))

    def h_point(self, x: PointId, m: int) -> HallElt:
        """Ĥ_{x,m}, 要求 d_x | m"""
        if m % x.degree:
            raise ConfigError(f"点 {x.render()} 的次数不整除 {m}")
        result = self._point_sum(x, m)
        if (m // x.degree) % 2 == 0:
            coeff = self.qf.v_power(-(m // 2)) * self.qf.quantum_int(m // 2) * Fraction(x.degree, m)
            result = result - self.C(m // 2).scale(coeff)
        return result

    def h_star(self, m: int) -> HallElt:
        result = self.algebra.zero()
        for x in self.points_dividing(m):
            result = result + self._point_sum(x, m)
        if m % 2 == 0:
            result = result - self.C(m // 2).scale(self.qf.quantum_int(m) / m)
        return result

    # ---- 分支顶点的种子 ----

    def _tube_sum(self, tube, classes: Sequence[TorsionClass], coeff_of) -> HallElt:
        alg = self.algebra
        result = alg.zero()
        for tors in classes:
            result = result + alg.basis(CohClass.build((), [tors])).scale(coeff_of(tors))
        return result

    def _signed_sum(self, tube, classes: Sequence[TorsionClass]) -> HallElt:
        return self._tube_sum(tube, classes, lambda m: (-1) ** tube.hom_dim(m, m))

    def pi(self, i: int, j: int) -> HallElt:
        """π_{j,1} = (-v^{-j}/(v-v^{-1})) Σ_{M_{j,δ}} (-1)^{dim End M}[M]"""
        if j == 0:
            return self.algebra.zero()
        tube = self.algebra.branch_tube(i)
        total = self._signed_sum(tube, tube.m_set(j, tube.delta_dimvec()))
        return total.scale(-self.qf.v_power(-j) * self.qf.theta_zero())

    def m_set_sum(self, i: int, j: int, dimvec: Sequence[int]) -> HallElt:
        tube = self.algebra.branch_tube(i)
        return self._signed_sum(tube, tube.m_set(j, dimvec))

    def b_minus_one(self, mu: Vertex) -> HallElt:
        """B̂_{[i,j],-1} = v^{1-j} Σ_{M_{j+1,δ-α_j}} (-1)^{dim End M}[M]*[K_{δ-α_j}]^{-1}"""
        i, j = mu.branch, mu.index
        tube = self.algebra.branch_tube(i)
        dimvec = list(tube.delta_dimvec())
        dimvec[j] = 0
        total = self._signed_sum(tube, tube.m_set(j + 1, dimvec))
        return total.scale(self.qf.v_power(1 - j)).shift(self.alpha(mu) - self.delta())

    def theta_branch_one(self, mu: Vertex) -> HallElt:
        i, j = mu.branch, mu.index
        v = self.qf.v
        middle = self.pi(i, j).scale(v + self.qf.v_power(-1))
        return self.pi(i, j + 1) - middle + self.pi(i, j - 1)

    # ---- 递推 ----

    def _branch_b(self, mu: Vertex, l: int) -> HallElt:
        alg = self.algebra
        if l == 0:
            return alg.ket(alg.exceptional(mu.branch, mu.index, 1))
        if l == -1:
            return self.b_minus_one(mu)
        two = self.qf.quantum_int(2)
        theta = self.Theta(mu, 1)
        if l >= 1:
            # iDR2, m=1: [Θ_1, B_{l-1}] = [2](B_l - B_{l-2}C)
            self.consumed.add(("iDR2", mu, mu, (1, l - 1)))
            prev = self.B(mu, l - 1)
            return alg.bracket(theta, prev).scale(two.inverse()) + self.B(mu, l - 2).shift(self.delta())
        self.consumed.add(("iDR2", mu, mu, (1, l + 1)))
        nxt = self.B(mu, l + 1)
        value = self.B(mu, l + 2) - alg.bracket(theta, nxt).scale(two.inverse())
        return value.shift(self.delta(-1))

    def _branch_theta(self, mu: Vertex, r: int) -> HallElt:
        """iDR3b 取 k=0, l=r-1, 解出 Θ_r"""
        alg = self.algebra
        v = self.qf.v_power
        self.consumed.add(("iDR3b", mu, mu, (0, r - 1)))
        lhs = alg.bracket(self.B(mu, 0), self.B(mu, r), v(-2))
        lhs = lhs - alg.bracket(self.B(mu, 1), self.B(mu, r - 1), v(2)).scale(v(-2))
        a = self.alpha(mu)
        rest = self.Theta(mu, r - 2).shift(self.delta() + a).scale(-v(-4))
        rest = rest + self.Theta(mu, 2 - r).shift(self.delta(r - 1) + a).scale(v(-2))
        rest = rest - self.Theta(mu, -r).shift(self.delta(r) + a).scale(v(-4))
        lead = lhs.scale(self.qf.of((1 - self.q) ** 2).inverse()) - rest
        return lead.shift(-a).scale(v(2))

    def is_consumed(self, relation: str, mu: Vertex, nu: Vertex, params: Tuple[int, ...]) -> bool:
        return (relation, mu, nu, tuple(params)) in self.consumed

    def bootstrap(self, branch_only: bool = True):
        """按上限预先生成全部分支生成元"""
        for mu in self.vertices():
            if branch_only and mu.is_star:
                continue
            for l in range(-self.max_index - 1, self.max_index + 2):
                self.B(mu, l)
            for r in range(1, self.max_index + 1):
                self.Theta(mu, r)
                self.H(mu, r)
        logger.info(f"生成元递推完成, 消耗关系实例 {len(self.consumed)} 个")

    # ---- 闭式 (实根与虚根) ----

    def _dbl_sum(self, tube, classes: Sequence[TorsionClass], shift_len: int = -1) -> HallElt:
        """Σ n(ℓ(M)+shift_len)·[[M]]"""
        alg = self.algebra
        result = alg.zero()
        for tors in classes:
            coh = CohClass.build((), [tors])
            coeff = self.qf.n_factor(len(tors.parts) + shift_len)
            result = result + alg.normalize_dbl(coh).scale(coeff)
        return result

    def theorem_b(self, i: int, r: int) -> Tuple[HallElt, HallElt, HallElt]:
        """B̂_{[i,1],r}, B̂_{[i,1],-r}, Θ̂_{[i,1],r} 的闭式"""
        if r < 1:
            raise ConfigError(f"r 必须为正: {r}")
        self._check_index(r)
        tube = self.algebra.branch_tube(i)
        mu = Vertex(i, 1)
        plus = self._dbl_sum(tube, tube.mrd_sets("real_plus", r)).scale(self.q - 1)
        minus = self._dbl_sum(tube, tube.mrd_sets("real_minus", r)).scale(1 - self.q)
        minus = minus.shift(self.alpha(mu) - self.delta(r))
        parts = [tube.partition_class(lam) for lam in partitions(r)]
        theta = self._dbl_sum(tube, parts, 0).scale(self.qf.v / (self.q - 1))
        theta = theta + self._dbl_sum(tube, tube.mrd_sets("imaginary", r)).scale(self.qf.v_power(-1))
        return plus, minus, theta
