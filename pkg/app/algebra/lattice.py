from dataclasses import dataclass
import itertools
import math
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import ConfigError

if TYPE_CHECKING:
    from app.algebra.tube import TorsionClass


@dataclass(frozen=True)
class WeightData:
    """权重类型 p 与例外点参数 λ_3..λ_t"""
    weights: Tuple[int, ...]
    lambdas: Tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.weights) < 2:
            raise ConfigError(f"例外点个数 t={len(self.weights)} 小于 2")
        if any(p < 1 for p in self.weights):
            raise ConfigError(f"权重必须为正整数: {self.weights}")

    @property
    def t(self) -> int:
        return len(self.weights)

    @property
    def p(self) -> int:
        return math.lcm(*self.weights)


@dataclass(frozen=True)
class LVec:
    """L(p) 中的元素, 规范形 l·c + Σ a_i·x_i, 0 <= a_i < p_i"""
    l: int
    a: Tuple[int, ...]
    weights: Tuple[int, ...]

    @classmethod
    def build(cls, weights: Sequence[int], l: int = 0, a: Optional[Sequence[int]] = None) -> "LVec":
        coords = list(a) if a is not None else [0] * len(weights)
        for i, p in enumerate(weights):
            carry, coords[i] = divmod(coords[i], p)
            l += carry
        return cls(l, tuple(coords), tuple(weights))

    def __add__(self, other: "LVec") -> "LVec":
        return LVec.build(self.weights, self.l + other.l, [x + y for x, y in zip(self.a, other.a)])

    def __sub__(self, other: "LVec") -> "LVec":
        return LVec.build(self.weights, self.l - other.l, [x - y for x, y in zip(self.a, other.a)])

    def __neg__(self) -> "LVec":
        return LVec.build(self.weights, -self.l, [-x for x in self.a])

    def scale(self, k: int) -> "LVec":
        return LVec.build(self.weights, k * self.l, [k * x for x in self.a])

    @property
    def degree(self) -> int:
        p = math.lcm(*self.weights)
        return self.l * p + sum(x * (p // w) for x, w in zip(self.a, self.weights))

    @property
    def is_effective(self) -> bool:
        return self.l >= 0

    def sort_key(self) -> Tuple:
        return (self.degree, self.l, self.a)

    def render(self) -> str:
        parts = [f"{self.l}c"]
        parts += [f"{x}x{i + 1}" for i, x in enumerate(self.a) if x]
        return "+".join(parts)


@dataclass(frozen=True)
class K0Class:
    """K0 中的整向量, 内部基为 (Ô, δ, Ŝ_ij)"""
    coords: Tuple[int, ...]

    def __add__(self, other: "K0Class") -> "K0Class":
        return K0Class(tuple(x + y for x, y in zip(self.coords, other.coords)))

    def __sub__(self, other: "K0Class") -> "K0Class":
        return K0Class(tuple(x - y for x, y in zip(self.coords, other.coords)))

    def __neg__(self) -> "K0Class":
        return K0Class(tuple(-x for x in self.coords))

    def __mul__(self, k: int) -> "K0Class":
        return K0Class(tuple(k * x for x in self.coords))

    __rmul__ = __mul__

    @property
    def is_zero(self) -> bool:
        return not any(self.coords)

    @property
    def o_coeff(self) -> int:
        # 基 {Ô, Ô(c), Ŝ_ij} 下的坐标
        return self.coords[0] - self.coords[1]

    @property
    def oc_coeff(self) -> int:
        return self.coords[1]


class Lattice:
    """K0(coh X) 与 Euler 型"""

    def __init__(self, data: WeightData):
        self.data = data
        self.weights = data.weights
        self.p = data.p
        self._index: Dict[Tuple[int, int], int] = {}
        pos = 2
        for i, w in enumerate(self.weights, start=1):
            for j in range(1, w):
                self._index[(i, j)] = pos
                pos += 1
        self.size = pos
        self._euler = self._euler_matrix()

    def _euler_matrix(self) -> np.ndarray:
        e = np.zeros((self.size, self.size), dtype=np.int64)
        e[0, 0], e[0, 1], e[1, 0] = 1, 1, -1
        for (i, j), x in self._index.items():
            if j == 1:
                e[x, 0] = -1
            for (i2, j2), y in self._index.items():
                if i2 != i:
                    continue
                e[x, y] = int(j == j2) - int(j == j2 + 1)
        return e

    def zero(self) -> K0Class:
        return K0Class((0,) * self.size)

    def _unit(self, pos: int) -> K0Class:
        coords = [0] * self.size
        coords[pos] = 1
        return K0Class(tuple(coords))

    def o_hat(self) -> K0Class:
        return self._unit(0)

    def delta(self) -> K0Class:
        return self._unit(1)

    def s_hat(self, i: int, j: int) -> K0Class:
        """单层 S_ij 的类, j 按模 p_i 取"""
        w = self.weights[i - 1]
        j %= w
        if j:
            return self._unit(self._index[(i, j)])
        total = self.delta()
        for jj in range(1, w):
            total = total - self._unit(self._index[(i, jj)])
        return total

    def s_coordinate(self, x: K0Class, i: int, j: int) -> int:
        """x 在 Ŝ_ij (1<=j<p_i) 上的坐标"""
        return x.coords[self._index[(i, j)]]

    def lvec(self, l: int = 0, a: Optional[Sequence[int]] = None) -> LVec:
        return LVec.build(self.weights, l, a)

    def canonical(self) -> LVec:
        return self.lvec(1)

    def x_vector(self, i: int) -> LVec:
        a = [0] * len(self.weights)
        a[i - 1] = 1
        return self.lvec(0, a)

    def dualizing(self) -> LVec:
        """ω = (t-2)c - Σ x_i"""
        omega = self.lvec(self.data.t - 2)
        for i in range(1, self.data.t + 1):
            omega = omega - self.x_vector(i)
        return omega

    def class_of_line(self, x: LVec) -> K0Class:
        total = self.o_hat() + self.delta() * x.l
        for i, a in enumerate(x.a, start=1):
            for j in range(1, a + 1):
                total = total + self.s_hat(i, j)
        return total

    def class_of_uniserial(self, branch: int, top: int, length: int) -> K0Class:
        total = self.zero()
        for m in range(length):
            total = total + self.s_hat(branch, top - m)
        return total

    def class_of_torsion(self, tors: "TorsionClass") -> K0Class:
        point = tors.point
        if point.kind == "exceptional":
            total = self.zero()
            for top, length in tors.parts:
                total = total + self.class_of_uniserial(point.branch, top, length)
            return total
        return self.delta() * (point.degree * tors.length)

    def euler_form(self, x: K0Class, y: K0Class) -> int:
        return int(np.array(x.coords) @ self._euler @ np.array(y.coords))

    def deg_rank(self, x: K0Class) -> Tuple[int, int]:
        degree = x.coords[1] * self.p
        for (i, _), pos in self._index.items():
            degree += x.coords[pos] * (self.p // self.weights[i - 1])
        return degree, x.coords[0]

    def hom_dim_lines(self, a: LVec, b: LVec) -> int:
        diff = b - a
        return diff.l + 1 if diff.is_effective else 0

    def ext_dim_lines(self, a: LVec, b: LVec) -> int:
        # Serre 对偶: Ext¹(O(a),O(b)) ≅ DHom(O(b),O(a+ω))
        return self.hom_dim_lines(b, a + self.dualizing())

    def is_leq(self, a: LVec, b: LVec) -> bool:
        return (b - a).is_effective

    def effective_below(self, bound: int) -> List[LVec]:
        """度数不超过 bound 的有效元"""
        out = []
        if bound < 0:
            return out
        for l in range(bound // self.p + 1):
            for a in itertools.product(*[range(w) for w in self.weights]):
                x = self.lvec(l, a)
                if x.degree <= bound:
                    out.append(x)
        return sorted(set(out), key=LVec.sort_key)

    def render(self, x: K0Class) -> str:
        terms = []
        if x.o_coeff:
            terms.append(f"{x.o_coeff}O")
        if x.oc_coeff:
            terms.append(f"{x.oc_coeff}O(c)")
        for (i, j), pos in self._index.items():
            if x.coords[pos]:
                terms.append(f"{x.coords[pos]}a[{i},{j}]")
        return " + ".join(terms) if terms else "0"
