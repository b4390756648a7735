from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
import itertools
import threading
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from app.algebra.groundfield import GroundField, WeightedLine
from app.algebra.lattice import K0Class, Lattice, LVec, WeightData
from app.algebra.linebundles import LineBundles, TorsionSheaf, merge_torsion
from app.algebra.qfield import QField, Scalar, qfield
from app.algebra.tube import TorsionClass, TubeAtlas, gl_order
from app.core.config import settings
from app.core.exceptions import CapExceededError, EngineError, IHallError, UnsupportedSectorError
from app.core.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class CohClass:
    """coh X 中对象的同构类: 线丛直和 ⊕ 挠层"""
    lines: Tuple[LVec, ...] = ()
    torsion: TorsionSheaf = ()

    @classmethod
    def build(cls, lines: Iterable[LVec] = (), torsion: Iterable[TorsionClass] = ()) -> "CohClass":
        lines = tuple(sorted(lines, key=LVec.sort_key))
        if len(lines) > settings.MAX_LINE_COUNT:
            raise CapExceededError(f"线丛个数 {len(lines)} 超出上限")
        sheaf = merge_torsion(torsion, ())
        if sum(t.length for t in sheaf) > settings.MAX_TORSION_LENGTH:
            raise CapExceededError("挠层长度超出上限")
        return cls(lines, sheaf)

    @property
    def rank(self) -> int:
        return len(self.lines)

    @property
    def is_zero(self) -> bool:
        return not self.lines and not self.torsion

    @property
    def is_torsion(self) -> bool:
        return not self.lines and bool(self.torsion)

    @property
    def is_bundle(self) -> bool:
        return bool(self.lines) and not self.torsion

    @property
    def is_mixed(self) -> bool:
        return bool(self.lines) and bool(self.torsion)

    def bundle_part(self) -> "CohClass":
        return CohClass(self.lines, ())

    def torsion_part(self) -> "CohClass":
        return CohClass((), self.torsion)

    def direct_sum(self, other: "CohClass") -> "CohClass":
        return CohClass.build(self.lines + other.lines, self.torsion + other.torsion)

    def sort_key(self) -> Tuple:
        return (
            len(self.lines),
            tuple(x.sort_key() for x in self.lines),
            tuple((t.point, t.parts) for t in self.torsion),
        )

    def render(self) -> str:
        lines = ",".join(f"O({x.render()})" for x in self.lines)
        torsion = ",".join(t.render() for t in self.torsion)
        return f"lines=[{lines}] ; torsion={{{torsion}}}"


Coefficient = Union[Scalar, int, Fraction]
Key = Tuple[CohClass, K0Class]


class HallElt:
    """ıHall 代数中的元素 Σ c·[M]*[K_α]"""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: "HallAlgebra", terms: Optional[Dict[Key, Scalar]] = None):
        self.algebra = algebra
        self.terms: Dict[Key, Scalar] = {}
        for key, coeff in (terms or {}).items():
            if coeff:
                self.terms[key] = algebra.qf.of(coeff)

    def _add_terms(self, other: "HallElt", sign: int) -> "HallElt":
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            value = out.get(key, self.algebra.qf.zero) + coeff * sign
            if value:
                out[key] = value
            else:
                out.pop(key, None)
        return HallElt(self.algebra, out)

    def __add__(self, other: "HallElt") -> "HallElt":
        return self._add_terms(other, 1)

    def __sub__(self, other: "HallElt") -> "HallElt":
        return self._add_terms(other, -1)

    def __neg__(self) -> "HallElt":
        return HallElt(self.algebra, {k: -c for k, c in self.terms.items()})

    def scale(self, factor: Coefficient) -> "HallElt":
        factor = self.algebra.qf.of(factor)
        if not factor:
            return HallElt(self.algebra)
        return HallElt(self.algebra, {k: c * factor for k, c in self.terms.items()})

    def __mul__(self, other) -> "HallElt":
        if isinstance(other, HallElt):
            return self.algebra.multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other) -> "HallElt":
        return self.scale(other)

    def __truediv__(self, other: Coefficient) -> "HallElt":
        return self.scale(self.algebra.qf.of(other).inverse())

    def shift(self, alpha: K0Class) -> "HallElt":
        """乘以中心元 [K_α]"""
        return HallElt(self.algebra, {(m, k + alpha): c for (m, k), c in self.terms.items()})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, HallElt):
            return (self - other).is_zero
        if other == 0:
            return self.is_zero
        return NotImplemented

    __hash__ = None

    def items(self) -> List[Tuple[Key, Scalar]]:
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1].coords))

    def coefficient(self, coh: CohClass, alpha: Optional[K0Class] = None) -> Scalar:
        alpha = alpha if alpha is not None else self.algebra.lattice.zero()
        return self.terms.get((coh, alpha), self.algebra.qf.zero)

    def dump(self) -> str:
        lat = self.algebra.lattice
        lines = [
            f"{coeff.render()} ; {coh.render()} ; K=[{lat.render(alpha)}]"
            for (coh, alpha), coeff in self.items()
        ]
        return "\n".join(lines) if lines else "0"

    def __repr__(self) -> str:
        return f"HallElt({len(self.terms)} terms)"


class HallAlgebra:
    """加权射影直线上的 ıHall 代数 (只含乘法所需的结构常数)"""

    def __init__(self, q: int, weights: Sequence[int], lambdas: Sequence[int] = ()):
        self.q = q
        self.qf: QField = qfield(q)
        self.field = GroundField(q)
        self.data = WeightData(tuple(weights), tuple(lambdas))
        self.lattice = Lattice(self.data)
        self.line = WeightedLine(self.field, self.data)
        self.atlas = TubeAtlas(self.line)
        self.bundles = LineBundles(self.line, self.lattice, self.atlas)
        self._cache: Dict[Tuple[CohClass, CohClass], HallElt] = {}
        self._lock = threading.Lock()

    @property
    def weights(self) -> Tuple[int, ...]:
        return self.data.weights

    # ---- 构造 ----

    def zero(self) -> HallElt:
        return HallElt(self)

    def one(self) -> HallElt:
        return self.basis(CohClass())

    def basis(self, coh: CohClass, alpha: Optional[K0Class] = None) -> HallElt:
        alpha = alpha if alpha is not None else self.lattice.zero()
        return HallElt(self, {(coh, alpha): self.qf.one})

    def torus(self, alpha: K0Class) -> HallElt:
        return self.basis(CohClass(), alpha)

    def lvec(self, l: int = 0, a: Optional[Sequence[int]] = None) -> LVec:
        return self.lattice.lvec(l, a)

    def line_class(self, x: LVec) -> CohClass:
        return CohClass.build([x])

    def torsion_class(self, *parts: TorsionClass) -> CohClass:
        return CohClass.build((), parts)

    def branch_tube(self, i: int):
        return self.atlas.branch_tube(i)

    def exceptional(self, i: int, top: int, length: int) -> TorsionClass:
        """S_{i,top}^{(length)}"""
        return self.atlas.branch_tube(i).uniserial(top, length)

    def ket(self, *objs: Union[LVec, TorsionClass, CohClass]) -> HallElt:
        """直和对象的基元素 [M]"""
        coh = CohClass()
        for obj in objs:
            if isinstance(obj, LVec):
                coh = coh.direct_sum(CohClass((obj,), ()))
            elif isinstance(obj, TorsionClass):
                coh = coh.direct_sum(CohClass((), (obj,)))
            else:
                coh = coh.direct_sum(obj)
        return self.basis(coh)

    # ---- 同调不变量 ----

    def k0_class(self, coh: CohClass) -> K0Class:
        total = self.lattice.zero()
        for x in coh.lines:
            total = total + self.lattice.class_of_line(x)
        for tors in coh.torsion:
            total = total + self.lattice.class_of_torsion(tors)
        return total

    def euler(self, first: CohClass, second: CohClass) -> int:
        return self.lattice.euler_form(self.k0_class(first), self.k0_class(second))

    def hom_line_torsion(self, x: LVec, torsion: TorsionSheaf) -> int:
        total = 0
        for tors in torsion:
            tube = self.atlas.tube(tors.point)
            vertex = x.a[tors.point.branch - 1] if tors.point.is_exceptional else 0
            total += tube.fq_dims(tors)[vertex]
        return total

    def aut_order(self, coh: CohClass) -> int:
        order = 1
        mult = Counter(coh.lines)
        for m in mult.values():
            order *= gl_order(m, self.q)
        for (x, mx), (y, my) in itertools.permutations(mult.items(), 2):
            order *= self.q ** (mx * my * self.lattice.hom_dim_lines(x, y))
        for tors in coh.torsion:
            order *= self.atlas.tube(tors.point).aut_order(tors)
        for x in coh.lines:
            order *= self.q ** self.hom_line_torsion(x, coh.torsion)
        return order

    def normalize_dbl(self, coh: CohClass) -> HallElt:
        """[[M]] = [M] / |Aut M|"""
        return self.basis(coh).scale(Fraction(1, self.aut_order(coh)))

    # ---- 乘法 ----

    def multiply(self, first: HallElt, second: HallElt) -> HallElt:
        result = self.zero()
        for (m, alpha), c1 in first.terms.items():
            for (n, beta), c2 in second.terms.items():
                prod = self.basis_product(m, n)
                result = result + prod.shift(alpha + beta).scale(c1 * c2)
        return result

    def bracket(self, first: HallElt, second: HallElt, twist: Coefficient = 1) -> HallElt:
        """[x, y]_a = xy - a·yx"""
        return self.multiply(first, second) - self.multiply(second, first).scale(twist)

    def basis_product(self, first: CohClass, second: CohClass) -> HallElt:
        key = (first, second)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        try:
            result = self._dispatch(first, second)
        except IHallError:
            raise
        except Exception as e:
            logger.error(f"计算 [{first.render()}]*[{second.render()}] 失败: {str(e)}")
            raise EngineError(f"乘积计算失败: {str(e)}")
        with self._lock:
            self._cache[key] = result
        return result

    def _dispatch(self, first: CohClass, second: CohClass) -> HallElt:
        if first.is_zero:
            return self.basis(second)
        if second.is_zero:
            return self.basis(first)
        if first.rank + second.rank > 2:
            raise CapExceededError(f"总秩 {first.rank + second.rank} 超出上限 2")
        if first.is_torsion and second.is_torsion:
            return self._torsion_torsion(first, second)
        if first.is_bundle and second.is_torsion:
            return self._bundle_torsion(first, second)
        if first.is_torsion and second.is_bundle:
            if second.rank == 1:
                return self._torsion_line(first, second)
            return self._torsion_rank_two(first, second)
        if first.is_bundle and second.is_bundle:
            return self._line_line(first.lines[0], second.lines[0])
        if first.is_mixed:
            return self._expand_left(first, second)
        return self._expand_right(first, second)

    def _torsion_torsion(self, first: CohClass, second: CohClass) -> HallElt:
        lat = self.lattice
        left = {t.point: t for t in first.torsion}
        right = {t.point: t for t in second.torsion}
        per_point = []
        for point in sorted(set(left) | set(right)):
            tube = self.atlas.tube(point)
            a, b = left.get(point), right.get(point)
            if a is not None and b is not None:
                options = [(m, n, w) for (m, n), w in tube.product_terms(a, b).items()]
            elif a is not None:
                options = [(a, a, Fraction(1))]
            else:
                options = [(b, tube.zero(), Fraction(1))]
            per_point.append((a, options))
        prefactor = self.qf.v_power(-self.euler(first, second))
        result = {}
        for combo in itertools.product(*[opts for _, opts in per_point]):
            middle, image, weight = [], lat.zero(), Fraction(1)
            for (a, _), (m, n, w) in zip(per_point, combo):
                middle.append(m)
                if a is not None:
                    image = image + lat.class_of_torsion(a) - lat.class_of_torsion(n)
                weight *= w
            key = (CohClass.build((), middle), image)
            result[key] = result.get(key, self.qf.zero) + prefactor * weight
        return HallElt(self, result)

    def _decompose(self, bundle: CohClass, torsion: CohClass) -> Counter:
        """f: V -> T 按 (ker, coker, [im]) 分组计数"""
        if bundle.rank == 1:
            return self.bundles.line_torsion_terms(bundle.lines[0], torsion.torsion)
        u, v = bundle.lines
        return self.bundles.rank_two_torsion_terms(u, v, torsion.torsion)

    def _bundle_torsion(self, first: CohClass, second: CohClass) -> HallElt:
        prefactor = self.qf.v_power(-self.euler(first, second))
        result = {}
        for (kernel, coker, image), count in self._decompose(first, second).items():
            key = (CohClass.build(kernel, coker), image)
            result[key] = result.get(key, self.qf.zero) + prefactor * count
        return HallElt(self, result)

    def _torsion_line(self, first: CohClass, second: CohClass) -> HallElt:
        prefactor = self.qf.v_power(self.euler(first, second))
        result = {}
        zero = self.lattice.zero()
        for b, rest, weight in self.bundles.torsion_line_terms(first.torsion, second.lines[0]):
            key = (CohClass.build([b], rest), zero)
            result[key] = result.get(key, self.qf.zero) + prefactor * weight
        return HallElt(self, result)

    def _line_line(self, a: LVec, b: LVec) -> HallElt:
        lat = self.lattice
        euler = lat.euler_form(lat.class_of_line(a), lat.class_of_line(b))
        split = self.qf.v_power(euler) / self.q ** lat.hom_dim_lines(a, b)
        result = {}
        zero = lat.zero()
        for (u, v), count in self.bundles.line_line_middles(a, b):
            result[(CohClass.build([u, v]), zero)] = split * count
        twist = self.qf.v_power(-euler)
        alpha = lat.class_of_line(a)
        for coker, count in self.bundles.cokernel_counts(a, b).items():
            key = (CohClass.build((), coker), alpha)
            result[key] = result.get(key, self.qf.zero) + twist * count
        return HallElt(self, result)

    def split_pair(self, u: LVec, v: LVec) -> HallElt:
        """[O(u)⊕O(v)] 用线丛乘积表示"""
        lat = self.lattice
        for a, b in ((u, v), (v, u)):
            if lat.ext_dim_lines(a, b) == 0:
                expr = self.basis_product(self.line_class(a), self.line_class(b))
                expr = expr.scale(self.qf.v_power(lat.hom_dim_lines(a, b)))
                alpha = lat.class_of_line(a)
                for coker, count in self.bundles.cokernel_counts(a, b).items():
                    expr = expr - self.basis(CohClass.build((), coker), alpha).scale(count)
                return expr
        raise UnsupportedSectorError(f"O({u.render()})⊕O({v.render()}) 无法用线丛乘积展开")

    def _torsion_rank_two(self, first: CohClass, second: CohClass) -> HallElt:
        lat = self.lattice
        u, v = second.lines
        for a, b in ((u, v), (v, u)):
            if lat.ext_dim_lines(a, b) != 0:
                continue
            left = self.basis_product(first, self.line_class(a))
            result = self.multiply(left, self.basis(self.line_class(b)))
            result = result.scale(self.qf.v_power(lat.hom_dim_lines(a, b)))
            alpha = lat.class_of_line(a)
            for coker, count in self.bundles.cokernel_counts(a, b).items():
                term = self.basis_product(first, CohClass.build((), coker))
                result = result - term.shift(alpha).scale(count)
            return result
        raise UnsupportedSectorError(f"O({u.render()})⊕O({v.render()}) 无法用线丛乘积展开")

    def _expand_left(self, first: CohClass, second: CohClass) -> HallElt:
        bundle, torsion = first.bundle_part(), first.torsion_part()
        inner = self.basis_product(torsion, second)
        result = self.multiply(self.basis(bundle), inner)
        result = result.scale(self.qf.v_power(self.euler(bundle, torsion)))
        for (kernel, coker, image), count in self._decompose(bundle, torsion).items():
            if image.is_zero:
                continue
            term = self.basis_product(CohClass.build(kernel, coker), second)
            result = result - term.shift(image).scale(count)
        return result

    def _expand_right(self, first: CohClass, second: CohClass) -> HallElt:
        bundle, torsion = second.bundle_part(), second.torsion_part()
        inner = self.basis_product(first, bundle)
        result = self.multiply(inner, self.basis(torsion))
        result = result.scale(self.qf.v_power(self.euler(bundle, torsion)))
        for (kernel, coker, image), count in self._decompose(bundle, torsion).items():
            if image.is_zero:
                continue
            term = self.basis_product(first, CohClass.build(kernel, coker))
            result = result - term.shift(image).scale(count)
        return result

    def cache_size(self) -> int:
        with self._lock:
            return len(self._cache)
