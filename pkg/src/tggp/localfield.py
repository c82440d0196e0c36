"""The base field F = Q_p (modelled by rationals), the quadratic algebra E,
the characters eta, mu, psi' and the measure constants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .cyclotomic import CycValue, gauss_sqrt

INFINITE_VALUATION = math.inf


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not a rational: {x!r}")


def int_valuation(n: int, p: int) -> int:
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation(x, p: int):
    """p-adic valuation of a rational; INFINITE_VALUATION for zero."""
    x = as_fraction(x)
    if x == 0:
        return INFINITE_VALUATION
    return int_valuation(x.numerator, p) - int_valuation(x.denominator, p)


def residue(x, modulus: int, p: int) -> int:
    """Image of a p-integral rational in Z/modulus (modulus a power of p)."""
    x = as_fraction(x)
    if x.denominator % p == 0:
        raise ValueError(f"{x} is not p-integral")
    if modulus == 1:
        return 0
    return x.numerator * pow(x.denominator, -1, modulus) % modulus


def is_nonresidue(e: int, p: int) -> bool:
    return e % p != 0 and pow(e % p, (p - 1) // 2, p) == p - 1


def is_prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))


@dataclass(frozen=True)
class ExtElement:
    """An element of E.  Inert: a + b*sqrt(eps).  Split: the pair (a, b)."""

    a: Fraction
    b: Fraction
    eps: int
    split: bool

    def _check(self, other):
        if not isinstance(other, ExtElement):
            raise TypeError(f"cannot combine ExtElement with {type(other).__name__}")
        if other.eps != self.eps or other.split != self.split:
            raise ValueError("elements of different quadratic algebras")

    def _lift(self, other):
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return ExtElement(f, f if self.split else Fraction(0), self.eps, self.split)
        self._check(other)
        return other

    def __add__(self, other):
        o = self._lift(other)
        return ExtElement(self.a + o.a, self.b + o.b, self.eps, self.split)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return ExtElement(self.a - o.a, self.b - o.b, self.eps, self.split)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return ExtElement(-self.a, -self.b, self.eps, self.split)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExtElement(self.a * other, self.b * other, self.eps, self.split)
        self._check(other)
        if self.split:
            return ExtElement(self.a * other.a, self.b * other.b, self.eps, True)
        return ExtElement(
            self.a * other.a + self.eps * self.b * other.b,
            self.a * other.b + self.b * other.a,
            self.eps,
            False,
        )

    __rmul__ = __mul__

    def conj(self) -> "ExtElement":
        """The Galois involution sigma."""
        if self.split:
            return ExtElement(self.b, self.a, self.eps, True)
        return ExtElement(self.a, -self.b, self.eps, False)

    def norm(self) -> Fraction:
        n = self * self.conj()
        return n.a

    def trace(self) -> Fraction:
        return (self + self.conj()).a

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_invertible(self) -> bool:
        return self.norm() != 0

    def inverse(self) -> "ExtElement":
        nm = self.norm()
        if nm == 0:
            raise ZeroDivisionError(f"{self} is not invertible in E")
        c = self.conj()
        return ExtElement(c.a / nm, c.b / nm, self.eps, self.split)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExtElement(self.a / other, self.b / other, self.eps, self.split)
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other):
        return self._lift(other) * self.inverse()

    def __pow__(self, e: int):
        out = self._lift(1)
        base = self if e >= 0 else self.inverse()
        for _ in range(abs(e)):
            out = out * base
        return out

    def in_base(self) -> bool:
        """True when sigma fixes the element (it lies in F)."""
        return self == self.conj()

    def base_value(self) -> Fraction:
        if not self.in_base():
            raise ValueError(f"{self} does not lie in F")
        return self.a

    def is_imaginary(self) -> bool:
        return self.conj() == -self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self._lift(other)
        if not isinstance(other, ExtElement):
            return NotImplemented
        return (self.a, self.b, self.eps, self.split) == (other.a, other.b, other.eps, other.split)

    def __hash__(self):
        return hash((self.a, self.b, self.eps, self.split))

    def __repr__(self):
        if self.split:
            return f"({self.a}, {self.b})"
        if self.b == 0:
            return f"{self.a}"
        return f"{self.a}+{self.b}*s{self.eps}"

    def to_json(self) -> dict:
        if self.split:
            return {"l": str(self.a), "r": str(self.b)}
        return {"a": str(self.a), "b": str(self.b)}


class LocalField:
    """Configuration of the local data: p, the algebra E, j and mu.

    ``mu_exp`` gives mu at the uniformizer as i**mu_exp: in the inert case it
    is forced to 2 (mu(p) = -1); in the split case it is mu_1(p).
    """

    def __init__(self, p: int, split: bool = False, epsilon: int | None = None, j=None, mu_exp: int | None = None):
        if not is_prime(p):
            raise ValueError(f"p = {p} is not prime")
        self.p = p
        self.q = p
        self.split = split
        if split:
            self.eps = 0
            self.mu_exp = 0 if mu_exp is None else mu_exp % 4
            j0 = Fraction(1) if j is None else as_fraction(j)
            self.j = ExtElement(j0, -j0, 0, True)
        else:
            if p == 2:
                raise ValueError("inert places of residue characteristic 2 are not supported")
            if epsilon is None:
                epsilon = next(e for e in range(2, p) if is_nonresidue(e, p))
            if not is_nonresidue(epsilon, p):
                raise ValueError(f"epsilon = {epsilon} is a square mod {p}")
            self.eps = epsilon
            if mu_exp is not None and mu_exp % 4 != 2:
                raise ValueError("inert mu must restrict to eta, so mu(p) = -1")
            self.mu_exp = 2
            jb = Fraction(1) if j is None else as_fraction(j)
            self.j = ExtElement(Fraction(0), jb, epsilon, False)
        if not self.j.is_imaginary() or self.val(self.j) != self._zero_val():
            raise ValueError(f"j = {self.j} must be a purely imaginary unit")

    def _zero_val(self):
        return (0, 0) if self.split else 0

    # elements ------------------------------------------------------------
    def E(self, a, b=0) -> ExtElement:
        """Inert: a + b sqrt(eps).  Split: the pair (a, b)."""
        return ExtElement(as_fraction(a), as_fraction(b), self.eps, self.split)

    def embed(self, x) -> ExtElement:
        x = as_fraction(x)
        return ExtElement(x, x if self.split else Fraction(0), self.eps, self.split)

    def zero(self) -> ExtElement:
        return self.embed(0)

    def one(self) -> ExtElement:
        return self.embed(1)

    def sqrt_eps(self) -> ExtElement:
        if self.split:
            raise ValueError("no sqrt(eps) in the split algebra")
        return self.E(0, 1)

    def imaginary_coord(self, y: ExtElement) -> Fraction:
        """F-coordinate of a purely imaginary element (y = t*j)."""
        if not y.is_imaginary():
            raise ValueError(f"{y} is not purely imaginary")
        return (y / self.j).base_value()

    def from_imaginary_coord(self, t) -> ExtElement:
        return self.j * as_fraction(t)

    # valuations ------------------------------------------------------------
    def val(self, x):
        """Valuation of a rational or of an element of E (a pair when split)."""
        if isinstance(x, ExtElement):
            if x.split:
                return (valuation(x.a, self.p), valuation(x.b, self.p))
            return min(valuation(x.a, self.p), valuation(x.b, self.p))
        return valuation(x, self.p)

    def val_total(self, x) -> int:
        """Valuation of |x|_E as a power of 1/q (sum of components when split)."""
        v = self.val(x)
        if isinstance(v, tuple):
            return v[0] + v[1]
        if isinstance(x, ExtElement):
            return 2 * v
        return v

    def is_integral(self, x) -> bool:
        v = self.val(x)
        if isinstance(v, tuple):
            return min(v) >= 0
        return v >= 0

    def is_unit(self, x) -> bool:
        v = self.val(x)
        if isinstance(v, tuple):
            return v == (0, 0)
        return v == 0

    # characters ------------------------------------------------------------
    def eta(self, x) -> CycValue:
        x = as_fraction(x)
        if x == 0:
            raise ValueError("eta is undefined at 0")
        if self.split:
            return CycValue.one()
        return CycValue.from_rational((-1) ** (self.val(x) % 2))

    def _i_power(self, e: int) -> CycValue:
        e %= 4
        if e == 0:
            return CycValue.one()
        if e == 2:
            return CycValue.from_rational(-1)
        return CycValue.root_of_unity(4, e)

    def mu(self, x) -> CycValue:
        """The unramified character mu of E^x (rationals are embedded in E)."""
        if not isinstance(x, ExtElement):
            x = self.embed(x)
        if not x.is_invertible():
            raise ValueError(f"mu is undefined at the non-invertible element {x}")
        if self.split:
            vl, vr = self.val(x)
            return self._i_power(self.mu_exp * (vl - vr))
        return self._i_power(self.mu_exp * self.val(x))

    def mu1(self, x) -> CycValue:
        """The split-place component character mu_1 on F^x."""
        if not self.split:
            raise ValueError("mu_1 only exists at split places")
        return self._i_power(self.mu_exp * self.val(x))

    def psi(self, x, K: int | None = None) -> CycValue:
        """psi'(x): conductor O_F, psi'(a/p^K) = exp(2 pi i a / p^K)."""
        x = as_fraction(x)
        v = self.val(x)
        if v >= 0:
            return CycValue.one()
        if K is None:
            K = -v
        elif -v > K:
            raise ValueError(f"psi argument of valuation {v} needs root-of-unity order p^{-v}; raise K above {K}")
        mod = self.p**K
        a = residue(x * mod, mod, self.p)
        return CycValue.root_of_unity(mod, a)

    def psi_exponent(self, x, K: int) -> int:
        """Exponent a with psi'(x) = zeta_{p^K}^a."""
        x = as_fraction(x)
        v = self.val(x)
        if v >= 0:
            return 0
        if -v > K:
            raise ValueError(f"psi argument of valuation {v} exceeds precision p^{K}")
        mod = self.p**K
        return residue(x * mod, mod, self.p)

    def psi_E(self, x: ExtElement) -> CycValue:
        """psi(x) = psi'(Tr(x)/2) on E."""
        return self.psi(x.trace() / 2)

    # absolute values ----------------------------------------------------------
    def sqrt_q(self) -> CycValue:
        return gauss_sqrt(self.p)

    def q_power_half(self, e: int) -> CycValue:
        """q^(e/2) as an exact cyclotomic number."""
        if e % 2 == 0:
            return CycValue.from_rational(Fraction(self.q) ** (e // 2))
        return self.sqrt_q() * Fraction(self.q) ** ((e - 1) // 2)

    def zeta_F1(self) -> Fraction:
        return 1 / (1 - Fraction(1, self.q))

    def zeta_E1(self) -> Fraction:
        if self.split:
            return self.zeta_F1() ** 2
        return 1 / (1 - Fraction(1, self.q**2))

    # serialization ------------------------------------------------------------
    def to_json(self) -> dict:
        d = {"p": self.p, "split": self.split, "mu_p": self.mu_exp}
        if self.split:
            d["j"] = str(self.j.a)
        else:
            d["epsilon"] = self.eps
            d["j"] = str(self.j.b)
        return d

    @classmethod
    def from_json(cls, obj) -> "LocalField":
        split = bool(obj.get("split", False))
        return cls(
            int(obj["p"]),
            split=split,
            epsilon=obj.get("epsilon"),
            j=obj.get("j"),
            mu_exp=obj.get("mu_p"),
        )

    def ext_from_json(self, obj) -> ExtElement:
        if isinstance(obj, (str, int)):
            return self.embed(Fraction(obj))
        if self.split:
            return self.E(Fraction(obj["l"]), Fraction(obj["r"]))
        return self.E(Fraction(obj["a"]), Fraction(obj.get("b", 0)))

    def __repr__(self):
        kind = "split" if self.split else f"inert eps={self.eps}"
        return f"LocalField(p={self.p}, {kind})"


def felem_to_json(x) -> str:
    x = as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def vol_gl(n: int, q: int) -> Fraction:
    """Volume of GL_n(O_F): prod_{i=2}^n (1 - q^-i)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    out = Fraction(1)
    for i in range(2, n + 1):
        out *= 1 - Fraction(1, q**i)
    return out


def vol_u(n: int, q: int) -> Fraction:
    """Volume of the unramified U_n(O_F): prod_{i=1}^n L(i, eta^i)^-1."""
    if n < 1:
        raise ValueError("n must be at least 1")
    out = Fraction(1)
    for i in range(1, n + 1):
        out *= 1 - Fraction((-1) ** i, q**i)
    return out


class LaurentValue:
    """Laurent polynomial in t = q^-(s - 1/2) with cyclotomic coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for k, v in (terms or {}).items():
            v = CycValue.coerce(v)
            if not v.is_zero():
                clean[int(k)] = v
        self.terms = clean

    @classmethod
    def constant(cls, c) -> "LaurentValue":
        return cls({0: c})

    @classmethod
    def monomial(cls, k: int, c=1) -> "LaurentValue":
        return cls({k: c})

    def __add__(self, other):
        if not isinstance(other, LaurentValue):
            other = LaurentValue.constant(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return LaurentValue(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentValue({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, LaurentValue):
            other = LaurentValue.constant(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentValue):
            c = CycValue.coerce(other)
            return LaurentValue({k: v * c for k, v in self.terms.items()})
        out = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = k1 + k2
                out[k] = out[k] + v1 * v2 if k in out else v1 * v2
        return LaurentValue(out)

    __rmul__ = __mul__

    def at_one(self) -> CycValue:
        """Evaluation at t = 1, i.e. s = 1/2."""
        total = CycValue.zero()
        for v in self.terms.values():
            total = total + v
        return total

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, LaurentValue):
            other = LaurentValue.constant(other)
        return (self - other).is_zero()

    def __hash__(self):
        return hash(tuple(sorted(self.terms)))

    def __repr__(self):
        if not self.terms:
            return "LaurentValue(0)"
        parts = [f"{v!r}*t^{k}" for k, v in sorted(self.terms.items())]
        return "LaurentValue(" + " + ".join(parts) + ")"

    def to_json(self) -> dict:
        return {str(k): v.to_json() for k, v in sorted(self.terms.items())}
