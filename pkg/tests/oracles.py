"""Independent reference computations used by the tests.

Nothing here calls the lattice enumeration, the Fourier code or the
engines under test; each oracle recomputes its quantity from scratch
by the most direct finite sum available.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from tggp.cyclotomic import CycValue


def p_val(x: Fraction, p: int) -> int:
    """p-adic valuation by repeated division (x nonzero)."""
    x = Fraction(x)
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


# ---------------------------------------------------------------------------
# n = 1 unramified orbital integrals as one-dimensional coset sums


def gl_n1_coset_sum(p: int, delta: Fraction, x: Fraction, jy: Fraction, reach: int = 40) -> int:
    """sum over L = p^a O (|a| <= reach) of (-1)^a [delta unit][jy in L][x L in O]."""
    if p_val(delta, p) != 0:
        return 0
    total = 0
    vx, vy = p_val(x, p), p_val(jy, p)
    for a in range(-reach, reach + 1):
        if vy >= a and vx + a >= 0:
            total += 1 if a % 2 == 0 else -1
    return total


def u_n1_coset_sum(p: int, norm_zeta: Fraction, z_norm: Fraction, reach: int = 40) -> int:
    """Self-dual lattices p^a O_E (|a| <= reach) with z* inside and z Lambda integral.

    ``norm_zeta`` is zeta-bar zeta and ``z_norm`` is the norm of z, so that
    val_E(z) = val(z_norm) / 2."""
    if p_val(norm_zeta, p) != 0:
        return 0
    vz = p_val(z_norm, p) // 2
    count = 0
    for a in range(-reach, reach + 1):
        self_dual = 2 * a == 0
        if self_dual and vz >= a and vz + a >= 0:
            count += 1
    return count


# ---------------------------------------------------------------------------
# finite fields and group orders


class GF:
    """F_{p^k} as polynomials modulo a brute-force irreducible polynomial."""

    def __init__(self, p: int, k: int):
        self.p, self.k = p, k
        self.mod = self._irreducible()
        self.elements = list(itertools.product(range(p), repeat=k))

    def _irreducible(self):
        p, k = self.p, self.k
        if k == 1:
            return None
        for tail in itertools.product(range(p), repeat=k):
            poly = list(tail) + [1]  # low to high, monic
            if all(self._eval(poly, a) % p for a in range(p)) and (k <= 3 or self._no_quadratic_factor(poly)):
                return poly
        raise AssertionError("no irreducible polynomial found")

    def _eval(self, poly, a):
        return sum(c * a**i for i, c in enumerate(poly))

    def _no_quadratic_factor(self, poly):
        """For degree 4: no monic quadratic divides ``poly``."""
        p = self.p
        for b in range(p):
            for c in range(p):
                rem = list(poly)
                for d in range(len(rem) - 1, 1, -1):
                    lead = rem[d] % p
                    if lead:
                        rem[d] = 0
                        rem[d - 1] -= lead * b
                        rem[d - 2] -= lead * c
                if rem[0] % p == 0 and rem[1] % p == 0:
                    return False
        return True

    def add(self, a, b):
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def mul(self, a, b):
        p, k = self.p, self.k
        prod = [0] * (2 * k - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                prod[i + j] += x * y
        if self.mod is not None:
            for d in range(2 * k - 2, k - 1, -1):
                c = prod[d]
                if c:
                    prod[d] = 0
                    for i in range(k):
                        prod[d - k + i] -= c * self.mod[i]
        return tuple(c % p for c in prod[:k])

    def power(self, a, e):
        out = tuple([1] + [0] * (self.k - 1))
        for _ in range(e):
            out = self.mul(out, a)
        return out

    @property
    def zero(self):
        return tuple([0] * self.k)

    @property
    def one(self):
        return tuple([1] + [0] * (self.k - 1))


def count_gl(field: GF, n: int) -> int:
    els = field.elements
    count = 0
    for entries in itertools.product(els, repeat=n * n):
        m = [entries[i * n:(i + 1) * n] for i in range(n)]
        if _det(field, m) != field.zero:
            count += 1
    return count


def _det(field: GF, m):
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        a = field.mul(m[0][0], m[1][1])
        b = field.mul(m[0][1], m[1][0])
        return field.add(a, tuple((-x) % field.p for x in b))
    raise NotImplementedError


def count_unitary(q_field: GF, big: GF, n: int) -> int:
    """|U_n(F_q)| for the standard Hermitian form on F_{q^2}^n; Frobenius is x -> x^q."""
    q = q_field.p**q_field.k
    frob = {a: big.power(a, q) for a in big.elements}
    els = big.elements
    one, zero = big.one, big.zero
    count = 0
    for entries in itertools.product(els, repeat=n * n):
        m = [entries[i * n:(i + 1) * n] for i in range(n)]
        ok = True
        for i in range(n):
            for j in range(n):
                s = zero
                for r in range(n):
                    s = big.add(s, big.mul(frob[m[r][i]], m[r][j]))
                if s != (one if i == j else zero):
                    ok = False
                    break
            if not ok:
                break
        count += ok
    return count


def vol_gl_direct(q: int, p: int, k: int, n: int) -> Fraction:
    """Vol GL_n(O) for the measure giving GL_1(O) volume 1."""
    field = GF(p, k)
    return Fraction(count_gl(field, n), q ** (n * n)) / (1 - Fraction(1, q))


def vol_u_direct(q: int, p: int, k: int, n: int) -> Fraction:
    """Vol U_n(O) as |U_n(F_q)| / q^(n^2)."""
    return Fraction(count_unitary(GF(p, k), GF(p, 2 * k), n), q ** (n * n))


# ---------------------------------------------------------------------------
# Fourier analysis by direct character sums


def psi_value(p: int, x: Fraction) -> CycValue:
    """exp(2 pi i {x}_p) by reading the p-adic fractional part directly."""
    x = Fraction(x)
    v = p_val(x, p) if x else 0
    if x == 0 or v >= 0:
        return CycValue.one()
    mod = p ** (-v)
    unit_den = x.denominator // mod
    a = (x.numerator * pow(unit_den, -1, mod)) % mod
    return CycValue.root_of_unity(mod, a)


def naive_fourier_at(phi, y) -> CycValue:
    """q^{-k d} sum_a phi(p^-m a) psi(p^-m a . y) over the defining table."""
    p = phi.field.p
    total = CycValue.zero()
    scale = Fraction(1, p**phi.m) if phi.m >= 0 else Fraction(p) ** (-phi.m)
    for key, val in phi.table.items():
        coords = [a * scale for a in key]
        total = total + val * psi_value(p, sum(c * w for c, w in zip(coords, y)))
    return total * Fraction(p) ** (-phi.k * phi.dim)


def naive_pair_integral(p: int, A, B, z1, c, lo: int, hi: int) -> CycValue:
    """int_F A(z1 + u) B(z1 - u) psi(u c) du for n = 1 as a Riemann sum over
    u in p^lo O / p^hi O (valid when the integrand lives there)."""
    total = CycValue.zero()
    width = hi - lo
    for a in range(p**width):
        u = Fraction(a) * Fraction(p) ** lo
        va = A([z1[0] + u])
        if va.is_zero():
            continue
        total = total + va * B([z1[0] - u]) * psi_value(p, u * c[0])
    return total * Fraction(p) ** (-hi)


# ---------------------------------------------------------------------------
# submodule counts by closing spans in a finite group


def count_submodules(p: int, k: int, n: int, eps: int | None = None) -> int:
    """Number of O-submodules of (O / p^k)^n, found as spans of n generators.

    With ``eps`` the ring is O_E = O[sqrt eps] and vectors are stored as
    2n integer coordinates (a_i, b_i) for a_i + b_i sqrt(eps)."""
    mod = p**k
    width = n if eps is None else 2 * n

    def times_sqrt(v):
        out = []
        for i in range(n):
            a, b = v[2 * i], v[2 * i + 1]
            out += [(eps * b) % mod, a]
        return tuple(out)

    def span(gens):
        gens = list(gens)
        if eps is not None:
            gens += [times_sqrt(g) for g in gens]
        seen = {tuple([0] * width)}
        frontier = list(seen)
        while frontier:
            nxt = []
            for v in frontier:
                for g in gens:
                    w = tuple((a + b) % mod for a, b in zip(v, g))
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
        return frozenset(seen)

    vectors = list(itertools.product(range(mod), repeat=width))
    subs = {span(gens) for gens in itertools.product(vectors, repeat=n)}
    return len(subs)
