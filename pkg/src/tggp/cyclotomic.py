"""Exact arithmetic in cyclotomic fields Q(zeta_N).

Values are stored in the power basis 1, z, ..., z^(d-1) with d = phi(N),
reduced modulo the N-th cyclotomic polynomial.  Values of different
conductors are combined by lifting both to the least common multiple.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def _poly_divmod_int(num, den):
    # integer polynomials, coefficient lists low -> high, den monic
    num = list(num)
    out = [0] * max(len(num) - len(den) + 1, 1)
    for i in range(len(num) - len(den), -1, -1):
        c = num[i + len(den) - 1]
        out[i] = c
        if c:
            for k, d in enumerate(den):
                num[i + k] -= c * d
    return out, num[: len(den) - 1]


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple:
    """Coefficients (low to high) of the n-th cyclotomic polynomial."""
    poly = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            poly, rem = _poly_divmod_int(poly, list(cyclotomic_poly(d)))
            assert not any(rem)
    return tuple(poly)


@lru_cache(maxsize=None)
def _reduction_table(n: int) -> tuple:
    """Row k holds z^k (0 <= k < n) in the power basis of length phi(n)."""
    phi = cyclotomic_poly(n)
    d = len(phi) - 1
    rows = []
    cur = [0] * d
    cur[0] = 1
    for _ in range(n):
        rows.append(tuple(cur))
        # multiply by z
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [c - top * phi[i] for i, c in enumerate(cur)]
    return tuple(rows)


def degree(n: int) -> int:
    return len(cyclotomic_poly(n)) - 1


def _integral_coeffs(coeffs):
    """(den, ints) with coeffs = ints / den."""
    den = 1
    for c in coeffs:
        if c:
            den = den * c.denominator // gcd(den, c.denominator)
    return den, [c.numerator * (den // c.denominator) if c else 0 for c in coeffs]


class CycValue:
    """An element of Q(zeta_N) with canonical coefficients."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs):
        self.order = order
        self.coeffs = tuple(coeffs)

    # construction -------------------------------------------------------
    @classmethod
    def from_rational(cls, x) -> "CycValue":
        return cls(1, (Fraction(x),))

    @classmethod
    def zero(cls) -> "CycValue":
        return cls(1, (Fraction(0),))

    @classmethod
    def one(cls) -> "CycValue":
        return cls(1, (Fraction(1),))

    @classmethod
    def from_powers(cls, order: int, powers) -> "CycValue":
        """Build sum c_k zeta_N^k from a mapping (or iterable of pairs) k -> c_k."""
        items = powers.items() if hasattr(powers, "items") else powers
        terms = []
        den = 1
        for k, c in items:
            if not c:
                continue
            c = Fraction(c)
            den = den * c.denominator // gcd(den, c.denominator)
            terms.append((k, c))
        # integer accumulation over a common denominator
        return cls.from_int_powers(order, ((k, c.numerator * (den // c.denominator)) for k, c in terms), den)

    @classmethod
    def from_int_powers(cls, order: int, powers, den: int = 1) -> "CycValue":
        """sum (c_k / den) zeta_N^k for integer c_k given as (k, c_k) pairs."""
        table = _reduction_table(order)
        d = len(table[0])
        acc = [0] * d
        for k, c in powers:
            if not c:
                continue
            row = table[k % order]
            for i, r in enumerate(row):
                if r:
                    acc[i] += c * r
        return cls(order, [Fraction(x, den) for x in acc])

    @classmethod
    def root_of_unity(cls, order: int, k: int = 1) -> "CycValue":
        return cls.from_powers(order, {k: Fraction(1)})

    @classmethod
    def coerce(cls, x) -> "CycValue":
        if isinstance(x, CycValue):
            return x
        if isinstance(x, (int, Fraction)):
            return cls.from_rational(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to CycValue")

    # conductor handling -------------------------------------------------
    def lift(self, order: int) -> "CycValue":
        if order == self.order:
            return self
        if order % self.order:
            raise ValueError(f"cannot lift order {self.order} to {order}")
        step = order // self.order
        return CycValue.from_powers(order, {i * step: c for i, c in enumerate(self.coeffs)})

    def _common(self, other: "CycValue"):
        n = _lcm(self.order, other.order)
        return self.lift(n), other.lift(n)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        try:
            other = CycValue.coerce(other)
        except TypeError:
            return NotImplemented
        a, b = self._common(other)
        return CycValue(a.order, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return CycValue(self.order, [-x for x in self.coeffs])

    def __sub__(self, other):
        try:
            other = CycValue.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return CycValue.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycValue(self.order, [x * other for x in self.coeffs])
        if not isinstance(other, CycValue):
            return NotImplemented
        if other.order == 1:
            return self * other.coeffs[0]
        if self.order == 1:
            return other * self.coeffs[0]
        a, b = self._common(other)
        da, ia = _integral_coeffs(a.coeffs)
        db, ib = _integral_coeffs(b.coeffs)
        acc = [0] * (len(ia) + len(ib) - 1)
        bnz = [(k, y) for k, y in enumerate(ib) if y]
        for i, x in enumerate(ia):
            if x:
                for k, y in bnz:
                    acc[i + k] += x * y
        return CycValue.from_int_powers(a.order, enumerate(acc), da * db)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycValue(self.order, [x / other for x in self.coeffs])
        other = CycValue.coerce(other)
        return self * other.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = CycValue.one()
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def galois(self, k: int) -> "CycValue":
        """Apply the automorphism zeta -> zeta^k (k coprime to the order)."""
        return CycValue.from_powers(self.order, {i * k: c for i, c in enumerate(self.coeffs)})

    def conj(self) -> "CycValue":
        """Complex conjugation zeta -> zeta^-1."""
        return self.galois(-1)

    def inverse(self) -> "CycValue":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero cyclotomic value")
        if self.order == 1:
            return CycValue(1, (1 / self.coeffs[0],))
        # x^-1 = (product of the other conjugates) / norm
        n = self.order
        others = CycValue.one()
        for k in range(2, n):
            if gcd(k, n) == 1:
                others = others * self.galois(k)
        norm = self * others
        assert norm.is_rational()
        return others / norm.rational()

    # predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coeffs[0]

    def __eq__(self, other):
        try:
            other = CycValue.coerce(other)
        except TypeError:
            return NotImplemented
        a, b = self._common(other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        if self.is_rational():
            return hash(self.coeffs[0])
        return hash(("cyc",) + tuple(sorted(set(self.coeffs))))

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        if self.is_rational():
            return f"CycValue({self.coeffs[0]})"
        terms = [f"{c}*z{i}" if i else str(c) for i, c in enumerate(self.coeffs) if c]
        return f"CycValue[{self.order}](" + " + ".join(terms) + ")"

    def to_complex(self) -> complex:
        import cmath

        z = cmath.exp(2j * cmath.pi / self.order)
        return sum(float(c) * z**i for i, c in enumerate(self.coeffs))

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "CycValue":
        order = int(obj["order"])
        coeffs = [Fraction(c) for c in obj["coeffs"]]
        if len(coeffs) != degree(order):
            # accept any exponent list and reduce it
            return cls.from_powers(order, dict(enumerate(coeffs)))
        return cls(order, coeffs)


class CycAccumulator:
    """Running sum of rational multiples of zeta_N^k, reduced once at the end."""

    __slots__ = ("order", "acc")

    def __init__(self, order: int):
        self.order = order
        self.acc = {}

    def add_power(self, k: int, c=1):
        k %= self.order
        self.acc[k] = self.acc.get(k, 0) + c

    def add(self, value: CycValue, c=1, shift: int = 0):
        """Add c * value * zeta_order^shift."""
        if self.order % value.order:
            raise ValueError(f"accumulator order {self.order} cannot absorb order {value.order}")
        step = self.order // value.order
        for i, x in enumerate(value.coeffs):
            if x:
                self.add_power(i * step + shift, c * x)

    def value(self) -> CycValue:
        return CycValue.from_powers(self.order, self.acc)


def gauss_sqrt(p: int) -> CycValue:
    """The positive square root of the prime p as an element of Q(zeta_4p)."""
    if p == 2:
        # zeta_8 + zeta_8^-1
        return CycValue.from_powers(8, {1: 1, 7: 1})
    n = 4 * p
    step = 4  # zeta_p = zeta_4p^4
    acc = {}
    for a in range(1, p):
        leg = pow(a, (p - 1) // 2, p)
        sign = 1 if leg == 1 else -1
        acc[a * step] = acc.get(a * step, 0) + sign
    g = CycValue.from_powers(n, acc)
    if p % 4 == 1:
        return g
    # g = i*sqrt(p); i = zeta_4p^p
    return g * CycValue.root_of_unity(n, -p)
