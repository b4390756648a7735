from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
import itertools
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from app.algebra.groundfield import PointId, WeightedLine
from app.algebra.lattice import Lattice, LVec
from app.algebra.tube import TorsionClass, Tube, TubeAtlas, TubeModel
from app.core.config import settings
from app.core.exceptions import CapExceededError, EngineError, UnsupportedSectorError
from app.core.logger import setup_logger
from app.utils import linalg

logger = setup_logger(__name__)

# 挠层: 按点排序、每点至多一项
TorsionSheaf = Tuple[TorsionClass, ...]


def merge_torsion(first: Sequence[TorsionClass], second: Sequence[TorsionClass]) -> TorsionSheaf:
    by_point: Dict[PointId, TorsionClass] = {}
    for tors in list(first) + list(second):
        if tors.is_zero:
            continue
        prev = by_point.get(tors.point)
        by_point[tors.point] = tors if prev is None else prev.direct_sum(tors)
    return tuple(by_point[p] for p in sorted(by_point))


@dataclass(frozen=True)
class Section:
    """Hom(O(source), O(target)) 中的元素 x^prefix·Σ c_k y1^{l-k} y2^k"""
    source: LVec
    target: LVec
    coeffs: Tuple[int, ...]

    @property
    def prefix(self) -> Tuple[int, ...]:
        return (self.target - self.source).a

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)


class LineBundles:
    """线丛之间的截面、余核与局部乘积"""

    def __init__(self, line: WeightedLine, lattice: Lattice, atlas: TubeAtlas):
        self.line = line
        self.lattice = lattice
        self.atlas = atlas
        self.q = line.q
        self.GF = line.field.GF
        self._support_cache: Dict[Tuple[LVec, LVec], Counter] = {}
        self._coker_cache: Dict[Tuple[LVec, LVec], Counter] = {}

    # ---- 截面 ----

    def sections(self, source: LVec, target: LVec, nonzero: bool = False) -> Iterator[Section]:
        diff = target - source
        if not diff.is_effective:
            if not nonzero:
                yield Section(source, target, ())
            return
        if self.q ** (diff.l + 1) > settings.HOM_ENUM_BUDGET:
            raise CapExceededError(f"截面空间 {self.q}^{diff.l + 1} 超出枚举上限")
        for coeffs in itertools.product(range(self.q), repeat=diff.l + 1):
            if nonzero and not any(coeffs):
                continue
            yield Section(source, target, coeffs)

    def section_basis(self, source: LVec, target: LVec) -> List[Section]:
        diff = target - source
        if not diff.is_effective:
            return []
        out = []
        for k in range(diff.l + 1):
            coeffs = [0] * (diff.l + 1)
            coeffs[k] = 1
            out.append(Section(source, target, tuple(coeffs)))
        return out

    def divisor(self, section: Section) -> Optional[Dict[PointId, int]]:
        """截面的零点除子, 零截面返回 None"""
        if section.is_zero:
            return None
        return self.line.binary_form_divisor(section.prefix, section.coeffs)

    def cokernel_of_section(self, section: Section) -> TorsionSheaf:
        """非零截面 O(source) -> O(target) 的余核"""
        divisor = self.divisor(section)
        if divisor is None:
            raise EngineError("零截面没有挠余核")
        out = []
        for point, valuation in divisor.items():
            tube = self.atlas.tube(point)
            if point.is_exceptional:
                top = section.target.a[point.branch - 1]
                out.append(tube.uniserial(top, valuation))
            else:
                out.append(tube.uniserial(0, valuation))
        return merge_torsion(out, ())

    def cokernel_counts(self, source: LVec, target: LVec) -> Counter:
        """非零截面按余核分类计数"""
        key = (source, target)
        if key not in self._coker_cache:
            counts: Counter = Counter()
            for s in self.sections(source, target, nonzero=True):
                counts[self.cokernel_of_section(s)] += 1
            self._coker_cache[key] = counts
        return self._coker_cache[key]

    def compose(self, first: Section, second: Section) -> Section:
        """second ∘ first"""
        if first.target != second.source:
            raise EngineError("截面无法复合")
        GF = self.GF
        form = self._mul_forms(list(first.coeffs), list(second.coeffs))
        exps = [x + y for x, y in zip(first.prefix, second.prefix)]
        for i, p in enumerate(self.line.weights, start=1):
            while exps[i - 1] >= p:
                exps[i - 1] -= p
                form = self._mul_forms(form, self._y_form(i))
        if not form:
            form = [0]
        return Section(first.source, second.target, tuple(int(GF(c)) for c in form))

    def _y_form(self, i: int) -> List[int]:
        # x_i^{p_i} 作为 y1,y2 的线性形式
        if i == 1:
            return [1, 0]
        if i == 2:
            return [0, 1]
        return [self.line.field.neg(self.line.lambdas[i - 3]), 1]

    def _mul_forms(self, f: List[int], g: List[int]) -> List[int]:
        if not f or not g:
            return []
        GF = self.GF
        out = [GF(0)] * (len(f) + len(g) - 1)
        for i, a in enumerate(f):
            for j, b in enumerate(g):
                out[i + j] = out[i + j] + GF(int(a)) * GF(int(b))
        return [int(c) for c in out]

    # ---- 线丛与线丛 ----

    def _support_counts(self, source: LVec, target: LVec) -> Counter:
        """截面按零点支撑分组计数, 零截面记为 None"""
        key = (source, target)
        if key not in self._support_cache:
            counts: Counter = Counter()
            for s in self.sections(source, target):
                divisor = self.divisor(s)
                counts[None if divisor is None else frozenset(divisor)] += 1
            self._support_cache[key] = counts
        return self._support_cache[key]

    def coprime_count(self, sub: LVec, first: LVec, second: LVec) -> int:
        """(g1, g2) ∈ Hom(O(sub),O(first)) × Hom(O(sub),O(second)) 且无公共零点"""
        c1, c2 = self._support_counts(sub, first), self._support_counts(sub, second)
        total = 0
        for s1, n1 in c1.items():
            for s2, n2 in c2.items():
                if s1 is None and s2 is None:
                    continue
                if s1 is None:
                    ok = not s2
                elif s2 is None:
                    ok = not s1
                else:
                    ok = not (s1 & s2)
                if ok:
                    total += n1 * n2
        return total

    def aut_pair(self, u: LVec, v: LVec) -> int:
        q = self.q
        if u == v:
            return (q * q - 1) * (q * q - q)
        return (q - 1) ** 2 * q ** (self.lattice.hom_dim_lines(u, v) + self.lattice.hom_dim_lines(v, u))

    def line_line_middles(self, quotient: LVec, sub: LVec) -> List[Tuple[Tuple[LVec, LVec], int]]:
        """Ext¹(O(quotient), O(sub)) 中按中间项 O(u)⊕O(v) 的元素个数"""
        lat, q = self.lattice, self.q
        bound = (quotient - sub).degree
        shifts = [lat.lvec(0)] + (lat.effective_below(bound) if bound >= 0 else [])
        seen = set()
        out = []
        for e in shifts:
            u = sub + e
            v = quotient + sub - u
            pair = tuple(sorted((u, v), key=LVec.sort_key))
            if pair in seen:
                continue
            seen.add(pair)
            coprime = self.coprime_count(sub, u, v)
            if not coprime:
                continue
            value = Fraction(coprime, q - 1) * (q - 1) ** 2 * q ** lat.hom_dim_lines(quotient, sub)
            value /= self.aut_pair(u, v)
            if value.denominator != 1:
                raise EngineError(f"扩张计数不是整数: {value}")
            out.append((pair, int(value)))
        total = sum(count for _, count in out)
        expected = q ** lat.ext_dim_lines(quotient, sub)
        if total != expected:
            raise UnsupportedSectorError(
                f"O({quotient.render()})×O({sub.render()}) 的扩张计数 {total} 与 q^ext={expected} 不符"
            )
        return sorted(out, key=lambda x: (x[0][0].sort_key(), x[0][1].sort_key()))

    # ---- 线丛与挠层 ----

    def line_torsion_terms(self, a: LVec, torsion: TorsionSheaf) -> Counter:
        """f: O(a) -> T 按 (ker, coker, [im]) 分组计数"""
        per_point = []
        for tors in torsion:
            tube = self.atlas.tube(tors.point)
            model = tube.model(tors)
            vertex = self._vertex(tors.point, a)
            options: Counter = Counter()
            for vec in linalg.all_vectors(self.GF, model.dims[vertex]):
                sub = tube.generated_submodule(model, [(vertex, vec)])
                coker = tube.classify_quotient(model, sub)
                options[(coker, tube.classify_sub(model, sub))] += 1
            per_point.append((tube, options))
        terms: Counter = Counter()
        for combo in itertools.product(*[list(opts.items()) for _, opts in per_point]):
            det = self.lattice.lvec(0)
            im_class = self.lattice.zero()
            cokers = []
            count = 1
            for (tube, _), ((coker, image), n) in zip(per_point, combo):
                det = det + self._det(tube, image)
                im_class = im_class + self.lattice.class_of_torsion(image)
                cokers.append(coker)
                count *= n
            terms[((a - det,), merge_torsion(cokers, ()), im_class)] += count
        return terms

    def _vertex(self, point: PointId, a: LVec) -> int:
        return a.a[point.branch - 1] if point.is_exceptional else 0

    def _det(self, tube: Tube, image: TorsionClass) -> LVec:
        """挠层类的行列式"""
        lat = self.lattice
        if image.is_zero:
            return lat.lvec(0)
        if tube.point.is_exceptional:
            return lat.x_vector(tube.point.branch).scale(image.length)
        return lat.canonical().scale(image.length * tube.d)

    def torsion_det(self, torsion: Sequence[TorsionClass]) -> LVec:
        det = self.lattice.lvec(0)
        for tors in torsion:
            det = det + self._det(self.atlas.tube(tors.point), tors)
        return det

    def torsion_line_terms(self, torsion: TorsionSheaf, a: LVec) -> List[Tuple[LVec, TorsionSheaf, Fraction]]:
        """[T]*[O(a)] 的中间项 O(b)⊕T' 及其系数 ∏ φ_x"""
        per_point = []
        for tors in torsion:
            tube = self.atlas.tube(tors.point)
            options = self._local_extensions(tube, tors, a)
            total = sum(phi for _, _, phi in options)
            expected = self.q ** (-self.lattice.euler_form(
                self.lattice.class_of_torsion(tors), self.lattice.class_of_line(a)
            ))
            if total != expected:
                raise EngineError(f"{tors.render()} 处的扩张计数 {total} 与 {expected} 不符")
            per_point.append(options)
        out = []
        for combo in itertools.product(*per_point):
            b = a
            rest = []
            weight = Fraction(1)
            for shift, tors_rest, phi in combo:
                b = b + shift
                rest.append(tors_rest)
                weight *= phi
            out.append((b, merge_torsion(rest, ()), weight))
        return out

    def _local_extensions(self, tube: Tube, tors: TorsionClass, a: LVec) -> List[Tuple[LVec, TorsionClass, Fraction]]:
        lat = self.lattice
        point = tors.point
        vertex = self._vertex(point, a)
        target_dims = tube.dimvec(tors)
        out = []
        for e in range(tors.length + 1):
            top = vertex + e
            head = tube.uniserial(top, e)
            rest_dims = tuple(x - y for x, y in zip(target_dims, tube.dimvec(head)))
            if any(x < 0 for x in rest_dims):
                continue
            if point.is_exceptional:
                shift = lat.x_vector(point.branch).scale(e)
            else:
                shift = lat.canonical().scale(e * tube.d)
            b = a + shift
            for rest in tube.classes_with_dimvec(rest_dims):
                hits = self._count_generators(tube, tors, rest, top, e, vertex)
                if not hits:
                    continue
                hom_b = tube.fq_dims(rest)[self._vertex(point, b)] if not rest.is_zero else 0
                phi = Fraction(hits * tube.aut_order(tors), tube.aut_order(rest) * self.q ** hom_b)
                out.append((shift, rest, phi))
        return out

    def _count_generators(self, tube: Tube, tors: TorsionClass, rest: TorsionClass, top: int, e: int, vertex: int) -> int:
        """满足 (U ⊕ T')/<(u_e, h)> ≅ T 的 h 的个数"""
        length = e + rest.length
        u_model = tube.model(tube.uniserial(top, length))
        big = tube.sum_model(u_model, tube.model(rest))
        if rest.is_zero:
            sub = [linalg.zeros(self.GF, big.dims[v], 0) for v in range(tube.n)]
            return int(tube.classify_quotient(big, sub) == tors)
        v0, top_vec = tube.top_vector(u_model, 0)
        u_e = tube.path(u_model, v0, e) @ top_vec
        rest_dim = big.dims[vertex] - u_model.dims[vertex]
        hits = 0
        for h in linalg.all_vectors(self.GF, rest_dim):
            vec = self.GF.Zeros(big.dims[vertex])
            vec[: u_model.dims[vertex]] = u_e
            vec[u_model.dims[vertex]:] = h
            sub = tube.generated_submodule(big, [(vertex, vec)])
            if tube.classify_quotient(big, sub) == tors:
                hits += 1
        return hits

    # ---- 秩二向量丛与挠层 ----

    def pullback(self, tube: Tube, model: TubeModel, vec, section: Section):
        """截面 O(w) -> O(u) 诱导的 Hom(O(u),T_x) -> Hom(O(w),T_x)"""
        point = tube.point
        diff = section.target - section.source
        weights = self.line.weights
        vertex = self._vertex(point, section.target)
        out_vertex = self._vertex(point, section.source)
        result = self.GF.Zeros(model.dims[out_vertex])
        if point.is_exceptional:
            i = point.branch
            if i > 2:
                raise UnsupportedSectorError("t >= 3 时不支持秩二向量丛的拉回")
            p = weights[i - 1]
            for k, c in enumerate(section.coeffs):
                if not c:
                    continue
                length = diff.a[i - 1] + (p * (diff.l - k) if i == 1 else p * k)
                result = result + self.GF(c) * (tube.path(model, vertex, length) @ vec)
            return result
        z = model.arrows[0]
        dim = model.dims[0]
        if point.is_infinity:
            for k, c in enumerate(section.coeffs):
                if c:
                    result = result + self.GF(c) * (self._mat_power(z, diff.l - k, dim) @ vec)
            return result
        n2 = (section.source.a[1] + diff.a[1]) // weights[1]
        for k, c in enumerate(section.coeffs):
            if c:
                result = result + self.GF(c) * (self._mat_power(z, n2 + k, dim) @ vec)
        return result

    def _mat_power(self, z, k: int, dim: int):
        out = linalg.identity(self.GF, dim)
        for _ in range(k):
            out = z @ out
        return out

    def rank_two_torsion_terms(self, u: LVec, v: LVec, torsion: TorsionSheaf) -> Counter:
        """f: O(u)⊕O(v) -> T 按 ((x, y), coker, [im]) 分组计数"""
        if self.line.data.t > 2:
            raise UnsupportedSectorError("t >= 3 时秩二向量丛与挠层的乘积未实现")
        bench = Workbench(self, u, v, torsion)
        return bench.terms()


class Workbench:
    """秩二向量丛 O(u)⊕O(v) 到挠层的映射的核分解"""

    def __init__(self, bundles: LineBundles, u: LVec, v: LVec, torsion: TorsionSheaf):
        self.bundles = bundles
        self.lattice = bundles.lattice
        self.GF = bundles.GF
        self.u = u
        self.v = v
        self.torsion = torsion
        self.tubes = [bundles.atlas.tube(t.point) for t in torsion]
        self.models = [tube.model(t) for tube, t in zip(self.tubes, torsion)]

    def _vectors(self, target: LVec) -> Iterator[List]:
        spaces = []
        for tube, model in zip(self.tubes, self.models):
            vertex = self.bundles._vertex(tube.point, target)
            spaces.append(list(linalg.all_vectors(self.GF, model.dims[vertex])))
        for combo in itertools.product(*spaces):
            yield list(combo)

    def terms(self) -> Counter:
        q = self.bundles.q
        budget = sum(
            m.dims[self.bundles._vertex(t.point, self.u)] + m.dims[self.bundles._vertex(t.point, self.v)]
            for t, m in zip(self.tubes, self.models)
        )
        if q ** budget > settings.HOM_ENUM_BUDGET:
            raise CapExceededError(f"|Hom(V,T)| = {q}^{budget} 超出枚举上限")
        out: Counter = Counter()
        first_maps = list(self._vectors(self.u))
        second_maps = list(self._vectors(self.v))
        for f1 in first_maps:
            for f2 in second_maps:
                out[self._classify(f1, f2)] += 1
        return out

    def _classify(self, f1: List, f2: List):
        lat = self.lattice
        cokers, images = [], []
        for tube, model, h1, h2 in zip(self.tubes, self.models, f1, f2):
            gens = [
                (self.bundles._vertex(tube.point, self.u), h1),
                (self.bundles._vertex(tube.point, self.v), h2),
            ]
            sub = tube.generated_submodule(model, gens)
            cokers.append(tube.classify_quotient(model, sub))
            images.append(tube.classify_sub(model, sub))
        im_class = lat.zero()
        for image in images:
            im_class = im_class + lat.class_of_torsion(image)
        coker = merge_torsion(cokers, ())
        det_im = self.bundles.torsion_det(images)
        if im_class.is_zero:
            kernel = tuple(sorted((self.u, self.v), key=LVec.sort_key))
            return kernel, coker, im_class
        kernel = self._kernel_pair(f1, f2, self.u + self.v - det_im, det_im.degree)
        return kernel, coker, im_class

    def hom_into_kernel(self, w: LVec, f1: List, f2: List) -> int:
        """dim Hom(O(w), ker f)"""
        basis_u = self.bundles.section_basis(w, self.u)
        basis_v = self.bundles.section_basis(w, self.v)
        if not basis_u and not basis_v:
            return 0
        columns = []
        for sections, maps in ((basis_u, f1), (basis_v, f2)):
            for s in sections:
                parts = [
                    self.bundles.pullback(tube, model, h, s)
                    for tube, model, h in zip(self.tubes, self.models, maps)
                ]
                col = self.GF.Zeros(sum(p.shape[0] for p in parts))
                pos = 0
                for p in parts:
                    col[pos:pos + p.shape[0]] = p
                    pos += p.shape[0]
                columns.append(col.reshape((-1, 1)))
        rows = columns[0].shape[0]
        phi = linalg.hstack(self.GF, columns, rows)
        return len(basis_u) + len(basis_v) - linalg.rank(phi)

    def _kernel_pair(self, f1: List, f2: List, det: LVec, degree: int) -> Tuple[LVec, LVec]:
        lat = self.lattice
        shifts = lat.effective_below(degree + lat.p)
        window = []
        for e in shifts:
            for base in (self.u, self.v):
                w = base - e
                if w not in window:
                    window.append(w)
        dims = {w: self.hom_into_kernel(w, f1, f2) for w in window}
        positive = [w for w in window if dims[w] > 0]
        maxima = [
            w for w in positive
            if not any(x != w and lat.is_leq(w, x) for x in positive)
        ]
        if len(maxima) == 2:
            x, y = maxima
        elif len(maxima) == 1:
            x = maxima[0]
            y = x if dims[x] >= 2 else det - x
        else:
            raise EngineError(f"核分解失败: 极大元 {[w.render() for w in maxima]}")
        if x + y != det:
            raise EngineError(f"核的行列式不符: {x.render()} + {y.render()} != {det.render()}")
        for w in window:
            if dims[w] != lat.hom_dim_lines(w, x) + lat.hom_dim_lines(w, y):
                raise EngineError(f"核分解在 O({w.render()}) 处不一致")
        return tuple(sorted((x, y), key=LVec.sort_key))
