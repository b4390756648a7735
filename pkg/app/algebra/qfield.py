from fractions import Fraction
from functools import lru_cache
import math
from typing import Union

import galois

from app.core.exceptions import ScalarError

Rational = Union[int, Fraction]


def check_ground_q(q: int) -> int:
    """校验 q 为非平方素数幂"""
    if not isinstance(q, int) or q < 2 or not galois.is_prime_power(q):
        raise ScalarError(f"q={q} 不是素数幂")
    root = math.isqrt(q)
    if root * root == q:
        raise ScalarError(f"q={q} 是完全平方数, Q(√q) 不是域")
    return q


class Scalar:
    """Q(√q) 中的元素 rat + surd·√q"""

    __slots__ = ("rat", "surd", "q")

    def __init__(self, rat: Rational = 0, surd: Rational = 0, q: int = 2):
        self.rat = Fraction(rat)
        self.surd = Fraction(surd)
        self.q = q

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            if other.q != self.q:
                raise ScalarError(f"标量的 q 不一致: {self.q} != {other.q}")
            return other
        if isinstance(other, (int, Fraction)):
            return Scalar(other, 0, self.q)
        raise ScalarError(f"无法转换为标量: {other!r}")

    def __add__(self, other) -> "Scalar":
        o = self._coerce(other)
        return Scalar(self.rat + o.rat, self.surd + o.surd, self.q)

    __radd__ = __add__

    def __sub__(self, other) -> "Scalar":
        o = self._coerce(other)
        return Scalar(self.rat - o.rat, self.surd - o.surd, self.q)

    def __rsub__(self, other) -> "Scalar":
        return self._coerce(other) - self

    def __neg__(self) -> "Scalar":
        return Scalar(-self.rat, -self.surd, self.q)

    def __mul__(self, other) -> "Scalar":
        o = self._coerce(other)
        # s² = q
        return Scalar(
            self.rat * o.rat + self.q * self.surd * o.surd,
            self.rat * o.surd + self.surd * o.rat,
            self.q,
        )

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        norm = self.rat * self.rat - self.q * self.surd * self.surd
        if norm == 0:
            raise ScalarError("除数为零")
        return Scalar(self.rat / norm, -self.surd / norm, self.q)

    def __truediv__(self, other) -> "Scalar":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "Scalar":
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "Scalar":
        if k < 0:
            return self.inverse() ** (-k)
        result = Scalar(1, 0, self.q)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.surd == 0 and self.rat == other
        if isinstance(other, Scalar):
            return self.q == other.q and self.rat == other.rat and self.surd == other.surd
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.rat, self.surd, self.q))

    def __bool__(self) -> bool:
        return bool(self.rat) or bool(self.surd)

    @property
    def is_rational(self) -> bool:
        return self.surd == 0

    def to_fraction(self) -> Fraction:
        if self.surd:
            raise ScalarError(f"{self.render()} 不是有理数")
        return self.rat

    def render(self) -> str:
        """文本形式 a + b*sqrt(q)"""
        if not self.surd:
            return str(self.rat)
        surd = f"{abs(self.surd)}*sqrt({self.q})"
        if not self.rat:
            return surd if self.surd > 0 else f"-{surd}"
        sign = "+" if self.surd > 0 else "-"
        return f"{self.rat} {sign} {surd}"

    def __repr__(self) -> str:
        return f"Scalar({self.render()})"


class QField:
    """固定 q 的标量域 Q(√q)"""

    def __init__(self, q: int):
        self.q = check_ground_q(q)
        self.zero = Scalar(0, 0, q)
        self.one = Scalar(1, 0, q)
        self.v = Scalar(0, 1, q)

    def scalar(self, rat: Rational = 0, surd: Rational = 0) -> Scalar:
        return Scalar(rat, surd, self.q)

    def of(self, value) -> Scalar:
        if isinstance(value, Scalar):
            return self.one._coerce(value)
        return Scalar(value, 0, self.q)

    def v_power(self, k: int) -> Scalar:
        """√q^k"""
        if k % 2 == 0:
            return Scalar(Fraction(self.q) ** (k // 2), 0, self.q)
        return Scalar(0, Fraction(self.q) ** ((k - 1) // 2), self.q)

    def quantum_int(self, m: int) -> Scalar:
        """[m] 在 v=√q 处的取值"""
        if m < 0:
            return -self.quantum_int(-m)
        total = self.zero
        for i in range(m):
            total = total + self.v_power(m - 1 - 2 * i)
        return total

    def n_factor(self, l: int, d: int = 1) -> Scalar:
        """∏_{i=1}^{l}(1 - q^{i·d})"""
        value = Fraction(1)
        for i in range(1, l + 1):
            value *= 1 - Fraction(self.q) ** (i * d)
        return Scalar(value, 0, self.q)

    def v_minus_inverse(self) -> Scalar:
        """v - v^{-1}"""
        return self.v - self.v_power(-1)

    def theta_zero(self) -> Scalar:
        """1/(v - v^{-1})"""
        return self.v_minus_inverse().inverse()


@lru_cache(maxsize=None)
def qfield(q: int) -> QField:
    return QField(q)


def scalar_arith(a: Scalar, b: Scalar, op: str) -> Scalar:
    """Q(√q) 中的四则运算"""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ScalarError(f"未知运算: {op}")


def v_power(k: int, q: int) -> Scalar:
    return qfield(q).v_power(k)


def quantum_int(m: int, q: int) -> Scalar:
    return qfield(q).quantum_int(m)


def n_factor(l: int, d: int, q: int) -> Scalar:
    return qfield(q).n_factor(l, d)
