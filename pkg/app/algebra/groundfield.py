from collections import Counter
from dataclasses import dataclass
import itertools
from typing import Dict, List, Sequence, Tuple

import galois

from app.algebra.lattice import WeightData
from app.algebra.qfield import check_ground_q
from app.core.config import settings
from app.core.exceptions import CapExceededError, ConfigError, EngineError
from app.core.logger import setup_logger

logger = setup_logger(__name__)

EXCEPTIONAL = "exceptional"
ORDINARY = "ordinary"


@dataclass(frozen=True, order=True)
class PointId:
    """P¹ 上的闭点

    poly 为首一不可约多项式的系数 (降幂), 无穷远点记为 ()
    """
    kind: str
    branch: int
    poly: Tuple[int, ...]
    degree: int

    @property
    def is_exceptional(self) -> bool:
        return self.kind == EXCEPTIONAL

    @property
    def is_infinity(self) -> bool:
        return self.poly == ()

    def render(self) -> str:
        if self.is_exceptional:
            return f"λ{self.branch}"
        if self.is_infinity:
            return "∞"
        return "poly" + "".join(str(c) for c in self.poly)


def _is_zero(poly: galois.Poly) -> bool:
    return poly.degree == 0 and int(poly.coeffs[0]) == 0


class GroundField:
    """基域 F_q 及其不可约多项式"""

    def __init__(self, q: int):
        self.q = check_ground_q(q)
        if q > settings.FIELD_ORDER_CAP:
            raise CapExceededError(f"q={q} 超出上限 {settings.FIELD_ORDER_CAP}")
        self.GF = galois.GF(q)
        self._irreducibles: Dict[int, List[galois.Poly]] = {}
        self._extensions: Dict[int, type] = {}

    def irreducibles(self, degree: int) -> List[galois.Poly]:
        """次数为 degree 的首一不可约多项式"""
        if degree > settings.IRREDUCIBLE_DEGREE_CAP:
            raise CapExceededError(f"不可约多项式次数 {degree} 超出上限")
        if degree not in self._irreducibles:
            self._irreducibles[degree] = list(galois.irreducible_polys(self.q, degree))
        return self._irreducibles[degree]

    def count_irreducible(self, degree: int) -> int:
        """项链公式 (1/d)Σ_{e|d} μ(e) q^{d/e}"""
        total = 0
        for e in range(1, degree + 1):
            if degree % e == 0:
                total += _mobius(e) * self.q ** (degree // e)
        return total // degree

    def extension(self, degree: int):
        """剩余域 F_{q^d}"""
        if degree not in self._extensions:
            if degree == 1:
                self._extensions[degree] = self.GF
            else:
                self._extensions[degree] = galois.GF(self.q ** degree)
        return self._extensions[degree]

    def poly(self, coeffs_desc: Sequence[int]) -> galois.Poly:
        return galois.Poly(list(coeffs_desc), field=self.GF)

    def neg(self, x: int) -> int:
        return int(-self.GF(x))

    def monic(self, f: galois.Poly) -> galois.Poly:
        lead = f.coeffs[0]
        return galois.Poly(f.coeffs / lead)

    def factor_poly(self, f: galois.Poly) -> List[Tuple[galois.Poly, int]]:
        """返回 (首一不可约因子, 重数), 按次数与字典序排列"""
        if _is_zero(f):
            raise EngineError("零多项式无法分解")
        f = self.monic(f)
        if f.degree == 0:
            return []
        factors, mults = f.factors()
        return sorted(zip(factors, (int(m) for m in mults)), key=lambda fm: (fm[0].degree, int(fm[0])))

    def gcd_is_unit(self, f: galois.Poly, g: galois.Poly) -> bool:
        return galois.gcd(f, g).degree == 0


def _mobius(n: int) -> int:
    result = 1
    k = 2
    while k * k <= n:
        if n % k == 0:
            n //= k
            if n % k == 0:
                return 0
            result = -result
        k += 1
    if n > 1:
        result = -result
    return result


class WeightedLine:
    """加权射影直线 X_{p,λ} 的闭点结构

    λ_1 = ∞, λ_2 = 0, λ_i (i>=3) 为 F_q 中互异的非零元,
    仿射坐标 z = y2/y1
    """

    def __init__(self, field: GroundField, data: WeightData):
        self.field = field
        self.data = data
        self.weights = data.weights
        lambdas = tuple(data.lambdas) if data.lambdas else tuple(range(1, data.t - 1))
        if len(lambdas) != data.t - 2:
            raise ConfigError(f"λ 的个数应为 {data.t - 2}, 实际为 {len(lambdas)}")
        if len(set(lambdas)) != len(lambdas) or any(x <= 0 or x >= field.q for x in lambdas):
            raise ConfigError(f"λ 必须为 F_{field.q} 中互异的非零元: {lambdas}")
        self.lambdas = lambdas
        self._branch_of_poly: Dict[Tuple[int, ...], int] = {(): 1, (1, 0): 2}
        for i, lam in enumerate(lambdas, start=3):
            self._branch_of_poly[(1, field.neg(lam))] = i

    @property
    def q(self) -> int:
        return self.field.q

    def branch_poly(self, i: int) -> Tuple[int, ...]:
        if i == 1:
            return ()
        if i == 2:
            return (1, 0)
        return (1, self.field.neg(self.lambdas[i - 3]))

    def point_of_poly(self, poly: Tuple[int, ...]) -> PointId:
        poly = tuple(int(c) for c in poly)
        degree = max(len(poly) - 1, 1)
        branch = self._branch_of_poly.get(poly)
        if branch is not None and self.weights[branch - 1] > 1:
            return PointId(EXCEPTIONAL, branch, poly, 1)
        return PointId(ORDINARY, 0, poly, degree)

    def branch_point(self, i: int) -> PointId:
        return self.point_of_poly(self.branch_poly(i))

    def point_poly(self, point: PointId) -> galois.Poly:
        """点的局部参数, 无穷远点取 w"""
        if point.is_infinity:
            return self.field.poly([1, 0])
        return self.field.poly(point.poly)

    def closed_points(self, max_degree: int) -> List[PointId]:
        points = [self.point_of_poly(())]
        for r in range(self.q):
            points.append(self.point_of_poly((1, self.field.neg(r))))
        for d in range(2, max_degree + 1):
            for g in self.field.irreducibles(d):
                points.append(self.point_of_poly(tuple(int(c) for c in g.coeffs)))
        return points

    def factor_binary_form(self, coeffs: Sequence[int]) -> List[Tuple[PointId, int]]:
        """分解二元形式 Σ c_k y1^{m-k} y2^k, 返回 (点, 重数)"""
        m = len(coeffs) - 1
        support = [k for k, c in enumerate(coeffs) if int(c)]
        if not support:
            raise EngineError("零形式无法分解")
        deg = max(support)
        counts: Counter = Counter()
        if m > deg:
            counts[self.point_of_poly(())] += m - deg
        if deg > 0:
            f = self.field.poly(list(reversed([int(c) for c in coeffs[: deg + 1]])))
            for g, mult in self.field.factor_poly(f):
                counts[self.point_of_poly(tuple(int(c) for c in g.coeffs))] += mult
        return sorted(counts.items())

    def binary_form_divisor(self, prefix: Sequence[int], coeffs: Sequence[int]) -> Dict[PointId, int]:
        """截面 x^prefix·h(y1,y2) 的除子, 例外点处赋值为 prefix_i + p_i·mult"""
        valuation: Counter = Counter()
        for i, e in enumerate(prefix, start=1):
            if e:
                valuation[self.branch_point(i)] += e
        for point, mult in self.factor_binary_form(coeffs):
            weight = self.weights[point.branch - 1] if point.is_exceptional else 1
            valuation[point] += weight * mult
        return dict(valuation)

    def count_coprime_pairs(self, a: int, b: int, exclude_divisor_x1: bool = False) -> int:
        """互素二元形式对 (J, L) 计数, deg J = a, deg L = b"""
        if a + b > settings.COPRIME_DEGREE_CAP:
            raise CapExceededError(f"次数 {a}+{b} 超出上限 {settings.COPRIME_DEGREE_CAP}")
        forms_a = [c for c in itertools.product(range(self.q), repeat=a + 1) if any(c)]
        forms_b = [c for c in itertools.product(range(self.q), repeat=b + 1) if any(c)]
        total = 0
        for j in forms_a:
            if exclude_divisor_x1 and j[a] == 0:
                continue
            fj = self._dehomogenize(j)
            for l in forms_b:
                # 在 ∞ 处同时为零
                if j[a] == 0 and l[b] == 0:
                    continue
                if self.field.gcd_is_unit(fj, self._dehomogenize(l)):
                    total += 1
        logger.debug(f"互素形式对 a={a}, b={b}: {total}")
        return total

    def _dehomogenize(self, coeffs: Sequence[int]) -> galois.Poly:
        return self.field.poly(list(reversed([int(c) for c in coeffs])))
