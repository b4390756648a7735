from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
import itertools
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from app.algebra.groundfield import PointId, WeightedLine
from app.core.config import settings
from app.core.exceptions import CapExceededError, EngineError
from app.core.logger import setup_logger
from app.utils import linalg

logger = setup_logger(__name__)

Part = Tuple[int, int]


@dataclass(frozen=True, order=True)
class TorsionClass:
    """一个点上挠层的同构类, parts 为 (top, length) 的多重集"""
    point: PointId
    n: int
    parts: Tuple[Part, ...] = ()

    @classmethod
    def build(cls, point: PointId, n: int, parts: Sequence[Part]) -> "TorsionClass":
        normal = [(top % n, length) for top, length in parts if length > 0]
        normal.sort(key=lambda x: (x[1], x[0]), reverse=True)
        return cls(point, n, tuple(normal))

    @property
    def length(self) -> int:
        return sum(length for _, length in self.parts)

    @property
    def degree(self) -> int:
        return self.point.degree

    @property
    def is_zero(self) -> bool:
        return not self.parts

    def direct_sum(self, other: "TorsionClass") -> "TorsionClass":
        if other.point != self.point:
            raise EngineError(f"不同点上的挠层不能合并: {self.point} / {other.point}")
        return TorsionClass.build(self.point, self.n, self.parts + other.parts)

    def partition(self) -> Tuple[int, ...]:
        return tuple(length for _, length in self.parts)

    def render(self) -> str:
        inner = ",".join(f"S{top}^({length})" for top, length in self.parts)
        return f"{self.point.render()}:[{inner}]"


def partitions(n: int, max_part: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    """n 的全部分拆, 部分按降序"""
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


def gl_order(m: int, Q: int) -> int:
    total = 1
    for i in range(m):
        total *= Q ** m - Q ** i
    return total


def aut_order_formula(partition: Sequence[int], Q: int) -> int:
    """Jordan 型模 M_λ 的自同构群阶的闭式"""
    mult = Counter(partition)
    size = sum(partition)
    exponent = size
    for i, li in mult.items():
        exponent += i * li * (li - 1)
    for (i, li), (j, lj) in itertools.combinations(sorted(mult.items()), 2):
        exponent += 2 * min(i, j) * li * lj
    value = Fraction(Q) ** exponent
    for li in mult.values():
        for k in range(1, li + 1):
            value *= 1 - Fraction(1, Q ** k)
    if value.denominator != 1:
        raise EngineError(f"自同构群阶不是整数: {value}")
    return int(value)


@dataclass
class TubeModel:
    """挠层的矩阵模型

    arrows[v]: V_v -> V_{v-1}, 普通点只有一个顶点, arrows[0] 为乘 z;
    steps 为幂零步, 普通点取 π(Z)
    """
    dims: Tuple[int, ...]
    arrows: List
    steps: List
    tops: List[Tuple[int, int]] = field(default_factory=list)


class Tube:
    """单个闭点处的挠层范畴"""

    def __init__(self, line: WeightedLine, point: PointId):
        self.line = line
        self.point = point
        self.q = line.q
        self.GF = line.field.GF
        self.n = line.weights[point.branch - 1] if point.is_exceptional else 1
        self.d = point.degree
        self.Q = self.q ** self.d
        self.local = None if point.is_exceptional else line.point_poly(point)
        self._ext_cache: Dict[Tuple[TorsionClass, TorsionClass], Counter] = {}
        self._model_cache: Dict[TorsionClass, TubeModel] = {}
        self._hom_cache: Dict[Tuple[TorsionClass, TorsionClass], int] = {}

    # ---- 构造 ----

    def make(self, parts: Sequence[Part]) -> TorsionClass:
        return TorsionClass.build(self.point, self.n, parts)

    def zero(self) -> TorsionClass:
        return self.make(())

    def uniserial(self, top: int, length: int) -> TorsionClass:
        return self.make([(top, length)])

    def simple(self, top: int) -> TorsionClass:
        return self.uniserial(top, 1)

    def partition_class(self, lam: Sequence[int], top: int = 0) -> TorsionClass:
        """例外点上为 ⊕ S_top^{(λ_k·n)}, 普通点上为 ⊕ S^{(λ_k)}"""
        return self.make([(top, part * self.n) for part in lam])

    # ---- 组合不变量 ----

    def dimvec(self, tors: TorsionClass) -> Tuple[int, ...]:
        counts = [0] * self.n
        for top, length in tors.parts:
            for m in range(length):
                counts[(top - m) % self.n] += 1
        return tuple(counts)

    def fq_dims(self, tors: TorsionClass) -> Tuple[int, ...]:
        return tuple(self.d * x for x in self.dimvec(tors))

    def socle_vertices(self, tors: TorsionClass) -> List[int]:
        return sorted({(top - length + 1) % self.n for top, length in tors.parts})

    def hom_dim(self, source: TorsionClass, target: TorsionClass) -> int:
        """dim Hom 在剩余域上的维数

        由矩阵模型中交换方块约束的零空间求出; 变量个数超过 HOM_MODEL_CAP 时只用组合公式
        """
        key = (source, target)
        if key not in self._hom_cache:
            formula = self.hom_dim_formula(source, target)
            variables = sum(a * b for a, b in zip(self.fq_dims(source), self.fq_dims(target)))
            if source.is_zero or target.is_zero or variables > settings.HOM_MODEL_CAP:
                self._hom_cache[key] = formula
            else:
                sm, tm = self.model(source), self.model(target)
                nullity = variables - linalg.rank(self.coboundary(sm, tm))
                if nullity != self.d * formula:
                    raise EngineError(
                        f"Hom({source.render()}, {target.render()}) 维数不符: 模型 {nullity}, 闭式 {self.d * formula}"
                    )
                self._hom_cache[key] = formula
        return self._hom_cache[key]

    def hom_dim_formula(self, source: TorsionClass, target: TorsionClass) -> int:
        total = 0
        for j, a in source.parts:
            for k, b in target.parts:
                for m in range(max(0, b - a), b):
                    if (m - (k - j)) % self.n == 0:
                        total += 1
        return total

    def hom_exp(self, source: TorsionClass, target: TorsionClass) -> int:
        return self.d * self.hom_dim(source, target)

    def euler_local(self, source: TorsionClass, target: TorsionClass) -> int:
        if not self.point.is_exceptional:
            return 0
        x, y = self.dimvec(source), self.dimvec(target)
        return sum(x[v] * y[v] - x[v] * y[(v - 1) % self.n] for v in range(self.n))

    def ext_dim(self, source: TorsionClass, target: TorsionClass) -> int:
        return self.hom_dim(source, target) - self.euler_local(source, target)

    def ext_exp(self, source: TorsionClass, target: TorsionClass) -> int:
        return self.d * self.ext_dim(source, target)

    def aut_order(self, tors: TorsionClass) -> int:
        mult = Counter(tors.parts)
        end = self.hom_dim(tors, tors)
        order = self.Q ** (end - sum(m * m for m in mult.values()))
        for m in mult.values():
            order *= gl_order(m, self.Q)
        return order

    def classes_with_dimvec(self, dimvec: Sequence[int]) -> List[TorsionClass]:
        """组成因子向量给定的全部同构类"""
        dimvec = tuple(dimvec)
        total = sum(dimvec)
        if total == 0:
            return [self.zero()]
        if self.n == 1:
            return [self.make([(0, x) for x in lam]) for lam in partitions(total)]
        candidates = sorted(
            ((top, length) for length in range(1, total + 1) for top in range(self.n)),
            key=lambda x: (x[1], x[0]),
            reverse=True,
        )
        cand_dims = [self.dimvec(self.uniserial(*c)) for c in candidates]
        out: List[TorsionClass] = []

        def search(start: int, rest: Tuple[int, ...], chosen: List[Part]):
            if not any(rest):
                out.append(self.make(chosen))
                return
            for idx in range(start, len(candidates)):
                dv = cand_dims[idx]
                if all(x <= y for x, y in zip(dv, rest)):
                    search(idx, tuple(y - x for x, y in zip(dv, rest)), chosen + [candidates[idx]])

        search(0, dimvec, [])
        return sorted(set(out))

    def m_set(self, j: int, dimvec: Sequence[int]) -> List[TorsionClass]:
        """类为 dimvec 且 soc ⊆ S_1 ⊕ ... ⊕ S_j 的对象"""
        allowed = {v % self.n for v in range(1, j + 1)}
        return [
            tors for tors in self.classes_with_dimvec(dimvec)
            if set(self.socle_vertices(tors)) <= allowed
        ]

    def delta_dimvec(self, k: int = 1) -> Tuple[int, ...]:
        return (k,) * self.n

    def mrd_sets(self, kind: str, r: int) -> List[TorsionClass]:
        """实根/虚根对应的对象集合"""
        p = self.n

        def nu_parts(size: int) -> Iterator[List[Part]]:
            for lam in partitions(size):
                yield [(0, part * p) for part in lam]

        out: List[TorsionClass] = []
        if kind == "real_plus":
            for b in range(0, r + 1):
                for nu in nu_parts(r - b):
                    out.append(self.make([(1, b * p + 1)] + nu))
        elif kind == "real_minus":
            for a in range(1, r + 1):
                for nu in nu_parts(r - a):
                    out.append(self.make([(0, a * p - 1)] + nu))
        elif kind == "imaginary":
            for a in range(1, r + 1):
                for nu in nu_parts(r - a):
                    out.append(self.make([(1, a * p)] + nu))
            for a in range(1, r + 1):
                for b in range(0, r - a + 1):
                    for nu in nu_parts(r - a - b):
                        out.append(self.make([(0, a * p - 1), (1, b * p + 1)] + nu))
        else:
            raise EngineError(f"未知的集合类型: {kind}")
        return sorted(set(out))

    def left_perpendicular(self, tors: TorsionClass, vertices: Sequence[int]) -> bool:
        """Hom(T, S_j) = 0 = Ext¹(T, S_j) 对所有给定顶点成立"""
        for j in vertices:
            s = self.simple(j)
            if self.hom_dim(tors, s) or self.ext_dim(tors, s):
                return False
        return True

    # ---- 矩阵模型 ----

    def model(self, tors: TorsionClass) -> TubeModel:
        cached = self._model_cache.get(tors)
        if cached is not None:
            return cached
        if self.point.is_exceptional:
            result = self._exceptional_model(tors)
        else:
            result = self._ordinary_model(tors)
        self._model_cache[tors] = result
        return result

    def _exceptional_model(self, tors: TorsionClass) -> TubeModel:
        n = self.n
        dims = [0] * n
        positions: List[List[Tuple[int, int]]] = []
        for top, length in tors.parts:
            pos = []
            for m in range(length):
                v = (top - m) % n
                pos.append((v, dims[v]))
                dims[v] += 1
            positions.append(pos)
        arrows = [linalg.zeros(self.GF, dims[(v - 1) % n], dims[v]) for v in range(n)]
        for pos in positions:
            for m in range(len(pos) - 1):
                (v, i), (w, k) = pos[m], pos[m + 1]
                arrows[v][k, i] = 1
        tops = [pos[0] for pos in positions]
        return TubeModel(tuple(dims), arrows, arrows, tops)

    def _ordinary_model(self, tors: TorsionClass) -> TubeModel:
        blocks, tops, offset = [], [], 0
        for _, length in tors.parts:
            blocks.append(linalg.companion(self.GF, self.local ** length))
            tops.append((0, offset))
            offset += self.d * length
        z = linalg.block_diag(self.GF, blocks) if blocks else linalg.zeros(self.GF, 0, 0)
        step = linalg.poly_of_matrix(self.GF, self.local, z)
        return TubeModel((offset,), [z], [step], tops)

    def sum_model(self, first: TubeModel, second: TubeModel) -> TubeModel:
        """first ⊕ second, 保持块的顺序"""
        n = self.n
        dims = tuple(first.dims[v] + second.dims[v] for v in range(n))
        arrows = [linalg.block_diag(self.GF, [first.arrows[v], second.arrows[v]]) for v in range(n)]
        steps = [linalg.block_diag(self.GF, [first.steps[v], second.steps[v]]) for v in range(n)]
        tops = list(first.tops) + [(v, first.dims[v] + i) for v, i in second.tops]
        return TubeModel(dims, arrows, steps, tops)

    def top_vector(self, model: TubeModel, index: int):
        v, i = model.tops[index]
        vec = self.GF.Zeros(model.dims[v])
        vec[i] = 1
        return v, vec

    def path(self, model: TubeModel, v: int, k: int):
        """从顶点 v 出发长度为 k 的路径映射"""
        mat = linalg.identity(self.GF, model.dims[v % self.n])
        for s in range(k):
            mat = model.steps[(v - s) % self.n] @ mat
        return mat

    def classify(self, dims: Sequence[int], path_rank: Callable[[int, int], int]) -> TorsionClass:
        """由路径映射的秩确定同构类"""
        total = sum(dims)
        ranks: Dict[Tuple[int, int], int] = {}

        def rk(v: int, r: int) -> int:
            v %= self.n
            if r == 0:
                return dims[v]
            if r > total:
                return 0
            key = (v, r)
            if key not in ranks:
                ranks[key] = path_rank(v, r)
            return ranks[key]

        if not self.point.is_exceptional:
            top = total // self.d
            ge = [0] * (top + 2)
            for r in range(1, top + 1):
                ge[r] = (rk(0, r - 1) - rk(0, r)) // self.d
            parts = [(0, a) for a in range(1, top + 1) for _ in range(ge[a] - ge[a + 1])]
            return self.make(parts)

        def c(v: int, r: int) -> int:
            return rk(v, r - 1) - rk(v, r)

        parts = []
        for j in range(self.n):
            for a in range(1, total + 1):
                mult = c(j, a) - c(j + 1, a + 1)
                if mult < 0:
                    raise EngineError("路径秩不一致")
                parts.extend([(j, a)] * mult)
        return self.make(parts)

    def classify_model(self, model: TubeModel) -> TorsionClass:
        return self.classify(model.dims, lambda v, r: linalg.rank(self.path(model, v, r)))

    def classify_sub(self, model: TubeModel, sub: List) -> TorsionClass:
        """子模 (各顶点的列空间) 的同构类"""
        dims = [linalg.rank(s) for s in sub]
        return self.classify(dims, lambda v, r: linalg.rank(self.path(model, v, r) @ sub[v]))

    def classify_quotient(self, model: TubeModel, sub: List) -> TorsionClass:
        """商模 V / sub 的同构类"""
        n = self.n
        sub_ranks = [linalg.rank(s) for s in sub]
        dims = [model.dims[v] - sub_ranks[v] for v in range(n)]

        def path_rank(v: int, r: int) -> int:
            w = (v - r) % n
            block = linalg.hstack(self.GF, [self.path(model, v, r), sub[w]], model.dims[w])
            return linalg.rank(block) - sub_ranks[w]

        return self.classify(dims, path_rank)

    def generated_submodule(self, model: TubeModel, gens: Sequence[Tuple[int, object]]) -> List:
        """由若干顶点向量生成的子模, 按顶点返回列基"""
        n = self.n
        cols: List[List] = [[] for _ in range(n)]
        for v, vec in gens:
            cur = vec
            vert = v % n
            for _ in range(sum(model.dims) + 1):
                if cur.shape[0] == 0 or not cur.any():
                    break
                cols[vert].append(cur.reshape((-1, 1)))
                cur = model.arrows[vert] @ cur
                vert = (vert - 1) % n
        out = []
        for v in range(n):
            block = linalg.hstack(self.GF, cols[v], model.dims[v])
            out.append(linalg.column_basis(self.GF, block))
        return out

    # ---- Hom 与 Ext ----

    def _layout(self, source: TubeModel, target: TubeModel) -> List[int]:
        offsets, pos = [], 0
        for v in range(self.n):
            offsets.append(pos)
            pos += target.dims[v] * source.dims[v]
        offsets.append(pos)
        return offsets

    def coboundary(self, source: TubeModel, target: TubeModel):
        """h ↦ (target.arrow_v h_v - h_{v-1} source.arrow_v)_v

        核为 Hom(source, target), 余核为 Ext¹(source, target)
        """
        n = self.n
        offsets = self._layout(source, target)
        row_pos = 0
        row_offsets = []
        for v in range(n):
            row_offsets.append(row_pos)
            row_pos += target.dims[(v - 1) % n] * source.dims[v]
        mat = linalg.zeros(self.GF, row_pos, offsets[-1])
        for v in range(n):
            w = (v - 1) % n
            t_arrow, s_arrow = target.arrows[v], source.arrows[v]
            cols_v, cols_w = source.dims[v], source.dims[w]
            for r in range(target.dims[w]):
                for c in range(source.dims[v]):
                    row = row_offsets[v] + r * cols_v + c
                    for s in range(target.dims[v]):
                        if t_arrow[r, s]:
                            var = offsets[v] + s * cols_v + c
                            mat[row, var] += t_arrow[r, s]
                    for s in range(source.dims[w]):
                        if s_arrow[s, c]:
                            var = offsets[w] + r * cols_w + s
                            mat[row, var] -= s_arrow[s, c]
        return mat

    def _unflatten(self, vec, source: TubeModel, target: TubeModel, offsets: List[int]) -> List:
        maps = []
        for v in range(self.n):
            block = vec[offsets[v]:offsets[v + 1]]
            maps.append(block.reshape((target.dims[v], source.dims[v])))
        return maps

    def enumerate_hom(self, source: TorsionClass, target: TorsionClass) -> Iterator[List]:
        """枚举 Hom(source, target) 的全部元素 (各顶点矩阵)"""
        expected = self.hom_exp(source, target)
        if self.q ** expected > settings.HOM_ENUM_BUDGET:
            raise CapExceededError(f"|Hom| = {self.q}^{expected} 超出枚举上限")
        sm, tm = self.model(source), self.model(target)
        offsets = self._layout(sm, tm)
        basis = linalg.null_space(self.GF, self.coboundary(sm, tm), offsets[-1])
        if basis.shape[0] != expected:
            raise EngineError(f"Hom 维数不符: 模型 {basis.shape[0]}, 闭式 {expected}")
        for vec in linalg.combinations(self.GF, basis):
            yield self._unflatten(vec, sm, tm, offsets)

    def kernel_class(self, source: TorsionClass, maps: List) -> TorsionClass:
        sm = self.model(source)
        ker = [linalg.null_space(self.GF, f, sm.dims[v]).T for v, f in enumerate(maps)]
        return self.classify_sub(sm, ker)

    def cokernel_class(self, target: TorsionClass, maps: List) -> TorsionClass:
        return self.classify_quotient(self.model(target), list(maps))

    def is_injective(self, source: TorsionClass, maps: List) -> bool:
        dims = self.model(source).dims
        return all(linalg.rank(f) == dims[v] for v, f in enumerate(maps))

    def ext_middles(self, quotient: TorsionClass, sub: TorsionClass) -> Counter:
        """Ext¹(quotient, sub) 中各中间项 E 的元素个数"""
        key = (quotient, sub)
        if key in self._ext_cache:
            return self._ext_cache[key]
        am, bm = self.model(quotient), self.model(sub)
        n = self.n
        delta = self.coboundary(am, bm)
        dim_c1 = delta.shape[0]
        image = linalg.column_basis(self.GF, delta)
        complement = linalg.complement_basis(self.GF, image, dim_c1)
        expected = self.ext_exp(quotient, sub)
        if len(complement) != expected:
            raise EngineError(f"Ext 维数不符: 模型 {len(complement)}, 闭式 {expected}")
        if self.q ** expected > settings.HOM_ENUM_BUDGET:
            raise CapExceededError(f"|Ext| = {self.q}^{expected} 超出枚举上限")
        row_offsets, pos = [], 0
        for v in range(n):
            row_offsets.append(pos)
            pos += bm.dims[(v - 1) % n] * am.dims[v]
        row_offsets.append(pos)
        basis = (
            self.GF(linalg.hstack(self.GF, [c.reshape((-1, 1)) for c in complement], dim_c1).T)
            if complement else self.GF.Zeros((0, dim_c1))
        )
        middles: Counter = Counter()
        for eta in linalg.combinations(self.GF, basis):
            arrows = []
            for v in range(n):
                w = (v - 1) % n
                block = eta[row_offsets[v]:row_offsets[v + 1]].reshape((bm.dims[w], am.dims[v]))
                top = linalg.hstack(self.GF, [bm.arrows[v], block], bm.dims[w])
                bottom = linalg.hstack(
                    self.GF, [linalg.zeros(self.GF, am.dims[w], bm.dims[v]), am.arrows[v]], am.dims[w]
                )
                arrows.append(self.GF(self._vstack(top, bottom)))
            dims = tuple(am.dims[v] + bm.dims[v] for v in range(n))
            if self.point.is_exceptional:
                steps = arrows
            else:
                steps = [linalg.poly_of_matrix(self.GF, self.local, arrows[0])]
            middles[self.classify_model(TubeModel(dims, arrows, steps))] += 1
        if sum(middles.values()) != self.q ** expected:
            raise EngineError("扩张计数与 q^ext 不符")
        self._ext_cache[key] = middles
        return middles

    def _vstack(self, top, bottom):
        out = self.GF.Zeros((top.shape[0] + bottom.shape[0], top.shape[1]))
        out[: top.shape[0], :] = top
        out[top.shape[0]:, :] = bottom
        return out

    def hall_number(self, whole: TorsionClass, quotient: TorsionClass, sub: TorsionClass) -> Fraction:
        """F^L_{M,N}: L 中同构于 N 且商同构于 M 的子对象个数"""
        if self.dimvec(whole) != tuple(
            x + y for x, y in zip(self.dimvec(quotient), self.dimvec(sub))
        ):
            return Fraction(0)
        count = 0
        for maps in self.enumerate_hom(sub, whole):
            if self.is_injective(sub, maps) and self.cokernel_class(whole, maps) == quotient:
                count += 1
        return Fraction(count, self.aut_order(sub))

    def ext_count_with_middle(self, quotient: TorsionClass, sub: TorsionClass, middle: TorsionClass) -> int:
        """|Ext¹(M,N)_L| = F^L_{M,N}|Aut M||Aut N||Hom(M,N)| / |Aut L|"""
        value = (
            self.hall_number(middle, quotient, sub)
            * self.aut_order(quotient)
            * self.aut_order(sub)
            * self.q ** self.hom_exp(quotient, sub)
            / self.aut_order(middle)
        )
        if value.denominator != 1:
            raise EngineError(f"扩张计数不是整数: {value}")
        return int(value)

    def brute_force_aut_order(self, tors: TorsionClass) -> int:
        return sum(1 for maps in self.enumerate_hom(tors, tors) if self.is_injective(tors, maps))

    def product_terms(self, left: TorsionClass, right: TorsionClass) -> Counter:
        """同一点处的挠层乘积, 返回 {(M, ker f): 权重}

        权重为 Σ_f |Ext¹(ker f, coker f)_M| / q^{ext}, 全局因子由调用方给出
        """
        grouped: Counter = Counter()
        for maps in self.enumerate_hom(left, right):
            grouped[(self.kernel_class(left, maps), self.cokernel_class(right, maps))] += 1
        terms: Counter = Counter()
        for (ker, coker), count in grouped.items():
            middles = self.ext_middles(ker, coker)
            scale = Fraction(count, self.q ** self.ext_exp(ker, coker))
            for middle, ext_count in middles.items():
                terms[(middle, ker)] += scale * ext_count
        return terms

    def product_terms_oracle(self, left: TorsionClass, right: TorsionClass) -> Counter:
        """用 Hall 数重算 product_terms

        #{f: ker ≅ N, coker ≅ L} = Σ_I F^A_{I,N} |Aut I| F^B_{L,I}
        """
        da, db = self.dimvec(left), self.dimvec(right)
        terms: Counter = Counter()
        image_dims = itertools.product(*[range(min(x, y) + 1) for x, y in zip(da, db)])
        for idim in image_dims:
            ndim = tuple(x - y for x, y in zip(da, idim))
            ldim = tuple(x - y for x, y in zip(db, idim))
            for image in self.classes_with_dimvec(idim):
                for ker in self.classes_with_dimvec(ndim):
                    f_a = self.hall_number(left, image, ker)
                    if not f_a:
                        continue
                    for coker in self.classes_with_dimvec(ldim):
                        f_b = self.hall_number(right, coker, image)
                        if not f_b:
                            continue
                        count = f_a * self.aut_order(image) * f_b
                        scale = count / self.q ** self.ext_exp(ker, coker)
                        mdim = tuple(x + y for x, y in zip(ndim, ldim))
                        for middle in self.classes_with_dimvec(mdim):
                            ext = self.ext_count_with_middle(ker, coker, middle)
                            if ext:
                                terms[(middle, ker)] += scale * ext
        return terms


class TubeAtlas:
    """按闭点缓存 Tube"""

    def __init__(self, line: WeightedLine):
        self.line = line
        self._tubes: Dict[PointId, Tube] = {}

    def tube(self, point: PointId) -> Tube:
        if point not in self._tubes:
            self._tubes[point] = Tube(self.line, point)
        return self._tubes[point]

    def branch_tube(self, i: int) -> Tube:
        return self.tube(self.line.branch_point(i))
