"""Finite models of Schwartz functions and of compactly supported
functions on GL_n, with Haar integration, Fourier transforms, the partial
Fourier transforms (dagger and double dagger) and the group actions.

A function on a coordinate space F^d (E_n is F^{2n} through a + b*sqrt(eps)
or through the two split components, F_n x F^{-,n} is F^{2n} through
y = j*t) is modelled by a ``LatticeFn``: it vanishes off p^-m O^d and is
constant on cosets of p^k O^d.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import gcd

from .cyclotomic import CycAccumulator, CycValue
from .lattice import Ring, coset_reps, echelon, hnf, index_valuation, intersect, lattice_sum
from .localfield import ExtElement, LocalField, as_fraction, residue, vol_gl
from .matalg import Mat

SPACES = ("F", "E", "FxFm")


def space_dim(space: str, n: int) -> int:
    if space not in SPACES:
        raise ValueError(f"unknown space {space!r}; expected one of {SPACES}")
    return n if space == "F" else 2 * n


def _cyc(x) -> CycValue:
    return CycValue.coerce(x)


# ---------------------------------------------------------------------------
# coordinates


def to_coords(field: LocalField, space: str, vec) -> tuple:
    """F-coordinates of a vector of the given space.

    ``vec`` is a list of Fractions ("F"), of ExtElements ("E"), or a pair
    (x, y) with x over F and y purely imaginary ("FxFm")."""
    if space == "F":
        return tuple(as_fraction(v) if not isinstance(v, ExtElement) else v.base_value() for v in vec)
    if space == "E":
        out = []
        for e in vec:
            if not isinstance(e, ExtElement):
                e = field.embed(e)
            out.extend((e.a, e.b))
        return tuple(out)
    x, y = vec
    xs = to_coords(field, "F", x)
    ts = tuple(field.imaginary_coord(e) if isinstance(e, ExtElement) else as_fraction(e) for e in y)
    return xs + ts


def from_coords_E(field: LocalField, coords) -> list:
    return [field.E(coords[2 * i], coords[2 * i + 1]) for i in range(len(coords) // 2)]


def _row_mat(field: LocalField, vec) -> Mat:
    return Mat([[e if isinstance(e, ExtElement) else field.embed(e) for e in vec]])


def _vmin_mat(field: LocalField, g: Mat) -> int:
    vals = []
    for e in g.entries():
        v = field.val(e)
        if isinstance(v, tuple):
            vals.extend(v)
        else:
            vals.append(v)
    return min(vals)


# ---------------------------------------------------------------------------
# lattice models


class LatticeFn:
    """A Schwartz function vanishing off p^-m O^d, constant on p^k O^d cosets.

    ``table`` maps integer tuples a (0 <= a_i < p^(m+k)) to the value at
    the coset of p^-m * a; missing keys are zero.
    """

    __slots__ = ("field", "space", "n", "m", "k", "table")

    def __init__(self, field: LocalField, space: str, n: int, m: int, k: int, table=None):
        if m + k < 0:
            raise ValueError(f"depth k = {k} must be at least -m = {-m}")
        self.field = field
        self.space = space
        self.n = n
        self.m = m
        self.k = k
        mod = field.p ** (m + k)
        d = space_dim(space, n)
        clean = {}
        for key, val in (table or {}).items():
            key = tuple(int(a) for a in key)
            if len(key) != d or any(a < 0 or a >= mod for a in key):
                raise ValueError(f"table key {key} is not a residue vector mod {mod} of length {d}")
            val = _cyc(val)
            if not val.is_zero():
                clean[key] = val
        self.table = clean

    @property
    def dim(self) -> int:
        return space_dim(self.space, self.n)

    @property
    def modulus(self) -> int:
        return self.field.p ** (self.m + self.k)

    # construction -----------------------------------------------------------
    @classmethod
    def from_function(cls, field, space, n, m, k, fn) -> "LatticeFn":
        """Tabulate ``fn(coords)`` on coset representatives."""
        out = cls(field, space, n, m, k)
        table = {}
        scale = Fraction(1) / Fraction(field.p) ** m
        for key in itertools.product(range(out.modulus), repeat=out.dim):
            v = _cyc(fn(tuple(a * scale for a in key)))
            if not v.is_zero():
                table[key] = v
        out.table = table
        return out

    @classmethod
    def indicator(cls, field, space, n, level: int = 0) -> "LatticeFn":
        """Indicator of p^level O^d."""
        m = max(0, -level)
        k = level
        if m + k < 0:
            k = -m
        out = cls(field, space, n, m, max(k, -m))
        mod = out.modulus
        table = {}
        for key in itertools.product(range(mod), repeat=out.dim):
            if all(field.val(Fraction(a) / Fraction(field.p) ** m) >= level for a in key):
                table[key] = CycValue.one()
        out.table = table
        return out

    @classmethod
    def basic(cls, field, space, n) -> "LatticeFn":
        return cls(field, space, n, 0, 0, {tuple([0] * space_dim(space, n)): 1})

    # evaluation ------------------------------------------------------------
    def key(self, coords):
        p = self.field.p
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(coords)}")
        out = []
        for c in coords:
            c = as_fraction(c) * Fraction(p) ** self.m
            if c.denominator % p == 0:
                return None
            out.append(residue(c, self.modulus, p))
        return tuple(out)

    def __call__(self, coords) -> CycValue:
        key = self.key(coords)
        if key is None:
            return CycValue.zero()
        return self.table.get(key, CycValue.zero())

    def at(self, vec) -> CycValue:
        return self(to_coords(self.field, self.space, vec))

    def coords_of(self, key) -> tuple:
        s = Fraction(1) / Fraction(self.field.p) ** self.m
        return tuple(a * s for a in key)

    def items(self):
        for key, v in self.table.items():
            yield self.coords_of(key), v

    def support_lattice(self):
        return _scalar_lattice(self.field.p, self.dim, -self.m)

    def invariance_lattice(self):
        return _scalar_lattice(self.field.p, self.dim, self.k)

    # algebra ---------------------------------------------------------------
    def refine(self, m: int, k: int) -> "LatticeFn":
        if m < self.m or k < self.k:
            raise ValueError("refinement can only enlarge the support level and the depth")
        if (m, k) == (self.m, self.k):
            return self
        out = LatticeFn(self.field, self.space, self.n, m, k)
        p = self.field.p
        new_mod = out.modulus
        old_mod = self.modulus
        shift = p ** (m - self.m)
        # old key a (coords p^-m0 a) is new key shift * a; add every p^k cell
        step = p ** (self.k + m) if self.k + m < m + k else new_mod
        table = {}
        for key, v in self.table.items():
            base = tuple(a * shift for a in key)
            choices = [range(b % step, new_mod, step) for b in base]
            for nk in itertools.product(*choices):
                table[nk] = v
        out.table = table
        return out

    def _common(self, other: "LatticeFn"):
        if (self.space, self.n, self.field.p) != (other.space, other.n, other.field.p):
            raise ValueError("functions on different spaces")
        m = max(self.m, other.m)
        k = max(self.k, other.k)
        return self.refine(m, k), other.refine(m, k)

    def _combine(self, other, op) -> "LatticeFn":
        a, b = self._common(other)
        keys = set(a.table) | set(b.table)
        z = CycValue.zero()
        return LatticeFn(a.field, a.space, a.n, a.m, a.k, {x: op(a.table.get(x, z), b.table.get(x, z)) for x in keys})

    def __add__(self, other):
        return self._combine(other, lambda u, v: u + v)

    def __sub__(self, other):
        return self._combine(other, lambda u, v: u - v)

    def pointwise(self, other) -> "LatticeFn":
        return self._combine(other, lambda u, v: u * v)

    def scale(self, c) -> "LatticeFn":
        c = _cyc(c)
        return LatticeFn(self.field, self.space, self.n, self.m, self.k, {x: v * c for x, v in self.table.items()})

    def conj(self) -> "LatticeFn":
        return LatticeFn(self.field, self.space, self.n, self.m, self.k, {x: v.conj() for x, v in self.table.items()})

    def reflect(self) -> "LatticeFn":
        """x -> phi(-x)."""
        mod = self.modulus
        return LatticeFn(
            self.field, self.space, self.n, self.m, self.k,
            {tuple((-a) % mod for a in x): v for x, v in self.table.items()},
        )

    def abs2(self) -> "LatticeFn":
        return self.pointwise(self.conj())

    def is_zero(self) -> bool:
        return not self.table

    def __eq__(self, other):
        if not isinstance(other, LatticeFn):
            return NotImplemented
        try:
            return (self - other).is_zero()
        except ValueError:
            return False

    def __hash__(self):
        return hash((self.space, self.n, len(self.table)))

    def __repr__(self):
        return f"LatticeFn({self.space}, n={self.n}, m={self.m}, k={self.k}, {len(self.table)} cosets)"

    # serialization -----------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "space": self.space,
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "entries": [{"rep": list(key), "val": v.to_json()} for key, v in sorted(self.table.items())],
        }

    @classmethod
    def from_json(cls, field: LocalField, obj) -> "LatticeFn":
        table = {tuple(e["rep"]): CycValue.from_json(e["val"]) if isinstance(e["val"], dict) else Fraction(e["val"]) for e in obj["entries"]}
        return cls(field, obj["space"], int(obj["n"]), int(obj["m"]), int(obj["k"]), table)


def _scalar_lattice(p: int, d: int, e: int):
    s = Fraction(p) ** e
    return [tuple(s if i == j else Fraction(0) for j in range(d)) for i in range(d)]


def haar_integrate(phi: LatticeFn) -> CycValue:
    """Integral for the self-dual measure (vol O^d = 1)."""
    total = CycValue.zero()
    for v in phi.table.values():
        total = total + v
    return total * Fraction(phi.field.p) ** (-phi.k * phi.dim)


def fourier(phi: LatticeFn) -> LatticeFn:
    """phi^(y) = int phi(x) psi'(x . y) dx on the coordinate space.

    The transform is computed one axis at a time; its support level is
    the input depth and its depth is the input support level."""
    field = phi.field
    p = field.p
    m, k, d = phi.m, phi.k, phi.dim
    N = p ** (m + k)
    order = N
    for v in phi.table.values():
        order = order * v.order // gcd(order, v.order)
    step = order // N
    grid = dict(phi.table)
    for axis in range(d):
        lines = {}
        for key, v in grid.items():
            rest = key[:axis] + key[axis + 1:]
            lines.setdefault(rest, []).append((key[axis], v))
        new = {}
        for rest, entries in lines.items():
            # clear denominators once per line and accumulate integers
            den = 1
            for _, v in entries:
                for x in v.coeffs:
                    if x:
                        den = den * x.denominator // gcd(den, x.denominator)
            terms = []
            for a, v in entries:
                sub = order // v.order
                terms.append((a, [(i * sub, int(x * den)) for i, x in enumerate(v.coeffs) if x]))
            for b in range(N):
                acc = [0] * order
                for a, parts in terms:
                    shift = (a * b % N) * step
                    for pos, c in parts:
                        acc[(pos + shift) % order] += c
                val = CycValue.from_int_powers(order, enumerate(acc), den)
                if not val.is_zero():
                    new[rest[:axis] + (b,) + rest[axis:]] = val
        grid = new
    c = Fraction(p) ** (-k * d)
    return LatticeFn(field, phi.space, phi.n, k, m, {key: v * c for key, v in grid.items()})


# ---------------------------------------------------------------------------
# generic transformed functions and the basic w-integral


class Pullback:
    """v -> scalar * phi(v G) for a LatticeFn (or Pullback) phi on F-coordinates."""

    def __init__(self, phi, G: Mat, scalar=1, conjugate: bool = False):
        self.phi = phi
        self.G = G
        self.Ginv = G.inverse()
        self.scalar = _cyc(scalar)
        self.conjugate = conjugate
        self.field = phi.field

    def __call__(self, coords) -> CycValue:
        v = (Mat([list(coords)]) * self.G).rows[0]
        val = self.phi(v)
        if self.conjugate:
            val = val.conj()
        return val * self.scalar

    def support_lattice(self):
        return _transform_lattice(self.phi.support_lattice(), self.Ginv)

    def invariance_lattice(self):
        return _transform_lattice(self.phi.invariance_lattice(), self.Ginv)

    def conj(self) -> "Pullback":
        return Pullback(self.phi, self.G, self.scalar.conj(), not self.conjugate)


def _transform_lattice(basis, M: Mat):
    rows = (Mat([list(v) for v in basis]) * M).rows
    return [tuple(r) for r in rows]


def _conj_fn(fn):
    if isinstance(fn, (LatticeFn, Pullback)):
        return fn.conj()
    raise TypeError("expected a LatticeFn or a Pullback")


def pair_integral(field: LocalField, A, B, z1, c) -> CycValue:
    """int_{F^d} A(z1 + u) B(z1 - u) psi'(u . c) du, exactly.

    A and B expose ``support_lattice``, ``invariance_lattice`` and a call
    on F-coordinates; the integral is a finite coset sum."""
    ring = Ring(field, False)
    z1 = tuple(as_fraction(a) for a in z1)
    c = tuple(as_fraction(a) for a in c)
    SA = echelon(ring, A.support_lattice())
    SB = echelon(ring, B.support_lattice())
    twice = tuple(2 * a for a in z1)
    from .lattice import contains

    if not contains(ring, lattice_sum(ring, SA, SB), twice):
        return CycValue.zero()
    lam = intersect(ring, echelon(ring, A.invariance_lattice()), echelon(ring, B.invariance_lattice()))
    lam = intersect(ring, lam, SA)
    # the character must be constant on lambda-cosets, else the integral cancels
    for v in lam:
        if field.val(sum((a * b for a, b in zip(v, c)), Fraction(0))) < 0:
            return CycValue.zero()
    total = CycValue.zero()
    for s in coset_reps(ring, SA, lam):
        u = tuple(si - zi for si, zi in zip(s, z1))
        a = A(tuple(zi + ui for zi, ui in zip(z1, u)))
        if a.is_zero():
            continue
        b = B(tuple(zi - ui for zi, ui in zip(z1, u)))
        if b.is_zero():
            continue
        total = total + a * b * field.psi(sum((x * y for x, y in zip(u, c)), Fraction(0)))
    return total * Fraction(field.p) ** (-index_valuation(ring, lam))


# ---------------------------------------------------------------------------
# the partial Fourier transforms


def _j_square(field: LocalField) -> Fraction:
    return (field.j * field.j).base_value()


def pft_dagger_at(field: LocalField, phi: LatticeFn, x, t, g: Mat | None = None) -> CycValue:
    """(R_mu(g) phi')^dagger(x, y) with y = j t, for phi' on E_n.

    With g = None this is phi'^dagger(x, y) = |j| int phi'(x + j w) psi'(j w y) dw.
    """
    if phi.space != "E":
        raise ValueError("dagger takes a function on E_n")
    n = phi.n
    x = [as_fraction(a) for a in x]
    t = [as_fraction(a) for a in t]
    j2 = _j_square(field)
    c = [j2 * a for a in t]
    p = field.p
    v2 = field.val(Fraction(2)) if field.split else 0
    ring = Ring(field, False)
    gm = None
    scalar = CycValue.one()
    if g is not None:
        gm = g.map(lambda e: e if isinstance(e, ExtElement) else field.embed(e))
        scalar = r_mu_scalar(field, gm)
    S0 = _scalar_lattice(p, n, -phi.m - v2)
    L0 = _scalar_lattice(p, n, phi.k)
    if gm is None:
        S, lam = S0, L0
    elif gm.is_base():
        # j w g lies in p^-m O_E^n exactly when w g lies in p^-m O^n
        ginv = gm.base_part().inverse()
        S = echelon(ring, _transform_lattice(S0, ginv))
        lam = echelon(ring, _transform_lattice(L0, ginv))
    else:
        lo = _vmin_mat(field, gm.inverse())
        hi = _vmin_mat(field, gm)
        S = _scalar_lattice(p, n, -phi.m + lo - v2)
        lam = _scalar_lattice(p, n, max(phi.k - hi, -phi.m + lo - v2))
    lam = intersect(ring, lam, S)
    for v in lam:
        if field.val(sum((a * b for a, b in zip(v, c)), Fraction(0))) < 0:
            return CycValue.zero()
    total = CycValue.zero()
    xs = [field.embed(a) for a in x]
    for w in coset_reps(ring, S, lam):
        z = [xi + field.j * wi for xi, wi in zip(xs, w)]
        if gm is not None:
            z = list((Mat([z]) * gm).rows[0])
        val = phi(to_coords(field, "E", z))
        if val.is_zero():
            continue
        total = total + val * field.psi(sum((wi * ci for wi, ci in zip(w, c)), Fraction(0)))
    return total * scalar * Fraction(p) ** (-index_valuation(ring, lam))


def pft_dagger(field: LocalField, phi: LatticeFn) -> LatticeFn:
    """phi'^dagger tabulated on F_n x F^{-,n} (coordinates (x, t), y = j t)."""
    n = phi.n
    v2 = field.val(Fraction(2)) if field.split else 0
    mo = max(phi.m + v2, phi.k)
    ko = max(phi.k, phi.m + v2)
    return LatticeFn.from_function(
        field, "FxFm", n, mo, ko, lambda co: pft_dagger_at(field, phi, co[:n], co[n:])
    )


def ddagger_at(field: LocalField, phi_a, phi_b, z, sign: int = 1) -> CycValue:
    """(phi_a (x) phi_b)^ddagger at z in E_n.

    Split places use the polarization F_n x {0}: for z = (z1, z2),
    int phi_a(z1 + w) phi_b(z1 - w) psi'(w . z2) dw.  Inert places identify
    z = a + b sqrt(eps) with (a, b) in F_n x F_n and pair w with
    ``sign`` * b."""
    z = [e if isinstance(e, ExtElement) else field.embed(e) for e in z]
    left = [e.a for e in z]
    right = [e.b for e in z]
    if not field.split:
        right = [sign * r for r in right]
    return pair_integral(field, phi_a, phi_b, left, right)


def pft_ddagger(field: LocalField, phi_a: LatticeFn, phi_b: LatticeFn, sign: int = 1) -> LatticeFn:
    """(phi_a (x) phi_b)^ddagger tabulated on E_n."""
    if phi_a.space != "F" or phi_b.space != "F" or phi_a.n != phi_b.n:
        raise ValueError("ddagger takes two functions on the same F_n")
    n = phi_a.n
    ma, mb = max(phi_a.m, phi_b.m), max(phi_a.k, phi_b.k)
    # z1 lives where both factors can be nonzero; z2 is dual to the w-range
    mo = max(ma, mb)
    ko = max(mb, ma)
    return LatticeFn.from_function(
        field, "E", n, mo, ko,
        lambda co: ddagger_at(field, phi_a, phi_b, from_coords_E(field, co), sign),
    )


# ---------------------------------------------------------------------------
# group actions


def r_mu_scalar(field: LocalField, g: Mat) -> CycValue:
    """mu(det g) |det g|_E^(1/2)."""
    det = g.det()
    if not isinstance(det, ExtElement):
        det = field.embed(det)
    e = field.val_total(det)
    return field.mu(det) * field.q_power_half(-e)


def r_mu_act(field: LocalField, g: Mat, phi: LatticeFn) -> LatticeFn:
    """(R_mu(g) phi')(z) = mu(det g) |det g|^(1/2) phi'(z g) on E_n."""
    if phi.space != "E":
        raise ValueError("R_mu acts on functions on E_n")
    g = g.map(lambda e: e if isinstance(e, ExtElement) else field.embed(e))
    if not g.is_invertible():
        raise ValueError("R_mu needs an invertible g")
    scalar = r_mu_scalar(field, g)
    m = phi.m - _vmin_mat(field, g.inverse())
    k = phi.k - _vmin_mat(field, g)

    def fn(co):
        z = Mat([from_coords_E(field, co)]) * g
        return phi(to_coords(field, "E", z.rows[0])) * scalar

    return LatticeFn.from_function(field, "E", phi.n, m, k, fn)


def split_unitary_component(field: LocalField, g: Mat) -> Mat:
    """g1 for g = (g1, transpose(g1)^-1); rejects anything else."""
    if not field.split:
        raise ValueError("split-place Weil action needs a split configuration")
    g1, g2 = g.components()
    if g2 != g1.T.inverse():
        raise ValueError("g is not of the form (g1, transpose(g1)^-1)")
    return g1


def weil_scalar(field: LocalField, g1: Mat) -> CycValue:
    """mu_1(det g1) |det g1|^(1/2)."""
    det = g1.det()
    return field.mu1(det) * field.q_power_half(-field.val(det))


def weil_act_split(field: LocalField, g: Mat, phi: LatticeFn) -> LatticeFn:
    """omega((g1, transpose(g1)^-1)) phi (x) = mu_1(det g1) |det g1|^(1/2) phi(x g1)."""
    if phi.space != "F":
        raise ValueError("the split Weil action is realized on functions on F_n")
    g1 = split_unitary_component(field, g)
    scalar = weil_scalar(field, g1)
    m = phi.m - _vmin_mat(field, g1.inverse())
    k = phi.k - _vmin_mat(field, g1)
    return LatticeFn.from_function(
        field, "F", phi.n, m, k, lambda co: phi((Mat([list(co)]) * g1).rows[0]) * scalar
    )


def weil_pullback(field: LocalField, g1: Mat, phi) -> Pullback:
    """Lazy form of the split Weil action by (g1, transpose(g1)^-1)."""
    return Pullback(phi, g1, weil_scalar(field, g1))


class SplitProduct:
    """The function (l, r) -> phi_a(l) phi_b(r) on E_n at a split place."""

    def __init__(self, field: LocalField, phi_a: LatticeFn, phi_b: LatticeFn):
        if not field.split:
            raise ValueError("product functions on E_n need a split place")
        self.field = field
        self.phi_a = phi_a
        self.phi_b = phi_b
        self.n = phi_a.n

    def at(self, z) -> CycValue:
        return self.phi_a([e.a for e in z]) * self.phi_b([e.b for e in z])

    def to_lattice_fn(self) -> LatticeFn:
        a, b = self.phi_a, self.phi_b
        m, k = max(a.m, b.m), max(a.k, b.k)
        return LatticeFn.from_function(
            self.field, "E", self.n, m, k, lambda co: self.at(from_coords_E(self.field, co))
        )


def split_dagger_at(field: LocalField, phi: SplitProduct, g: Mat, x, y0) -> CycValue:
    """(R_mu(g) phi')^dagger(x, y) at a split place for a product phi'.

    With g = (g1, g2), j = (j0, -j0) and y = (y0, -y0) the w-integral is
    int phi_a((x + j0 w) g1) phi_b((x - j0 w) g2) psi'(j0 w y0) dw; the
    substitution u = j0 w turns it into a pair integral."""
    g1, g2 = g.components()
    A = Pullback(phi.phi_a, g1)
    B = Pullback(phi.phi_b, g2)
    val = pair_integral(field, A, B, x, y0)
    return val * r_mu_scalar(field, g)


# ---------------------------------------------------------------------------
# functions on GL_n


def k_index(n: int, q: int, k: int) -> int:
    """[GL_n(O) : K_k] for a residue field of size q."""
    if k == 0:
        return 1
    size = 1
    for i in range(n):
        size *= q**n - q**i
    return size * q ** (n * n * (k - 1))


def k_reps(ring: Ring, n: int, k: int, k2: int):
    """Representatives of K_k / K_k2 (K_0 = GL_n(O), K_k = 1 + p^k Mat_n(O))."""
    if k2 <= k:
        yield Mat.identity(n, ring.one())
        return
    p = Fraction(ring.p)
    one, zero = ring.one(), ring.zero()
    if k == 0:
        digits = ring.residues(k2)
        for entries in itertools.product(digits, repeat=n * n):
            m = Mat([entries[i * n:(i + 1) * n] for i in range(n)])
            if ring.val(m.det()) == 0:
                yield m
        return
    digits = ring.residues(k2 - k)
    for entries in itertools.product(digits, repeat=n * n):
        yield Mat([[(one if i == j else zero) + entries[i * n + j] * p**k for j in range(n)] for i in range(n)])


def in_k(ring: Ring, m: Mat, k: int) -> bool:
    if any(ring.val(e) < 0 for e in m.entries() if not ring.is_zero(e)):
        return False
    if k == 0:
        return ring.val(m.det()) == 0
    diff = m - m.identity_like()
    return all(ring.is_zero(e) or ring.val(e) >= k for e in diff.entries())


def coset_key(ring: Ring, g: Mat, k: int):
    """Canonical key of the coset g K_k."""
    n = g.n
    cols = [tuple(g.rows[i][j] for i in range(n)) for j in range(n)]
    H = hnf(ring, cols)
    Hm = Mat([[H[j][i] for j in range(n)] for i in range(n)])
    hkey = tuple(e for v in H for e in v)
    if k == 0:
        return hkey
    u = Hm.inverse() * g
    return hkey + tuple(ring.residue_key(e, k) for e in u.entries())


class GroupFn:
    """A finitely supported function on GL_n(F) or GL_n(E), right K_k-invariant.

    At split places GL_n(E) = GL_n(F) x GL_n(F) is handled componentwise.
    """

    def __init__(self, field: LocalField, n: int, level: int, entries=(), over: str = "F"):
        if over not in ("F", "E"):
            raise ValueError("over must be 'F' or 'E'")
        self.field = field
        self.n = n
        self.level = level
        self.over = over
        self._table = {}
        for g, v in entries:
            self._add(g, v)

    # component handling -------------------------------------------------
    def _split_E(self) -> bool:
        return self.over == "E" and self.field.split

    def _rings(self):
        if self.over == "F" or self._split_E():
            return Ring(self.field, False)
        return Ring(self.field, True)

    def _prep(self, g: Mat) -> Mat:
        if self.over == "E":
            return g.map(lambda e: e if isinstance(e, ExtElement) else self.field.embed(e))
        return g.map(lambda e: e.base_value() if isinstance(e, ExtElement) else as_fraction(e))

    def key(self, g: Mat):
        g = self._prep(g)
        ring = self._rings()
        if self._split_E():
            return tuple(coset_key(ring, c, self.level) for c in g.components())
        return coset_key(ring, g, self.level)

    def _add(self, g, v):
        v = _cyc(v)
        g = self._prep(g)
        if not g.is_invertible():
            raise ValueError("group function supported on a singular matrix")
        key = self.key(g)
        if key in self._table:
            old_g, old_v = self._table[key]
            v = old_v + v
            g = old_g
        if v.is_zero():
            self._table.pop(key, None)
        else:
            self._table[key] = (g, v)

    def __call__(self, g: Mat) -> CycValue:
        hit = self._table.get(self.key(g))
        return hit[1] if hit else CycValue.zero()

    def items(self):
        return list(self._table.values())

    def __len__(self):
        return len(self._table)

    def is_zero(self) -> bool:
        return not self._table

    # measure -----------------------------------------------------------------
    def coset_volume(self) -> Fraction:
        q = self.field.q
        if self.over == "F":
            return vol_gl(self.n, q) / k_index(self.n, q, self.level)
        if self.field.split:
            return (vol_gl(self.n, q) / k_index(self.n, q, self.level)) ** 2
        return vol_gl(self.n, q * q) / k_index(self.n, q * q, self.level)

    def haar(self) -> CycValue:
        total = CycValue.zero()
        for _, v in self._table.values():
            total = total + v
        return total * self.coset_volume()

    # bounds ------------------------------------------------------------------
    def _components(self, g: Mat):
        return g.components() if self._split_E() else [g]

    def vmin(self) -> int:
        return min(_vmin_mat(self.field, g) for g, _ in self._table.values())

    def vmin_inv(self) -> int:
        return min(_vmin_mat(self.field, g.inverse()) for g, _ in self._table.values())

    def left_level(self) -> int:
        """A level L with f(kappa g) = f(g) for kappa in K_L."""
        if not self._table:
            return self.level
        spread = max(-_vmin_mat(self.field, g) - _vmin_mat(self.field, g.inverse()) for g, _ in self._table.values())
        crude = self.level + spread
        if self.over == "E" and not self.field.split:
            return crude
        for L in range(crude):
            if self._left_invariant(L):
                return L
        return crude

    def _left_invariant(self, L: int) -> bool:
        """f(kappa g) = f(g) for topological generators kappa of K_L."""
        gens = _k_generators(self.field.p, self.n, L)
        gens = gens + [k.inverse() for k in gens]
        if self._split_E():
            one = Mat.identity(self.n)
            gens = [_pair_mat(self.field, k, one) for k in gens] + [_pair_mat(self.field, one, k) for k in gens]
        for g, v in self._table.values():
            for k in gens:
                if self(k * g) != v:
                    return False
        return True

    def bi_level(self) -> int:
        return max(self.level, self.left_level())

    # operations -----------------------------------------------------------
    def scale(self, c) -> "GroupFn":
        return GroupFn(self.field, self.n, self.level, [(g, v * _cyc(c)) for g, v in self.items()], self.over)

    def refine(self, level: int) -> "GroupFn":
        """The same function on K_level cosets."""
        if level < self.level:
            raise ValueError("can only refine to a deeper level")
        if level == self.level:
            return self
        ring = self._rings()
        reps = list(k_reps(ring, self.n, self.level, level))
        out = []
        for g, v in self.items():
            comps = self._components(g)
            if len(comps) == 1:
                out.extend((g * r, v) for r in reps)
            else:
                for r1 in reps:
                    for r2 in reps:
                        out.append((_pair_mat(self.field, comps[0] * r1, comps[1] * r2), v))
        return GroupFn(self.field, self.n, level, out, self.over)

    def transpose(self) -> "GroupFn":
        """g -> f(transpose(g)), tabulated at the left-invariance level."""
        if self._split_E():
            raise ValueError("transpose is only provided over a field")
        L = self.left_level()
        ring = self._rings()
        out = {}
        for g, _ in self.items():
            spread = -_vmin_mat(self.field, g) - _vmin_mat(self.field, g.inverse())
            for kap in k_reps(ring, self.n, self.level, L + spread):
                h = kap * g.T
                key = coset_key(ring, h, L)
                if key not in out:
                    out[key] = (h, self(h.T))
        res = GroupFn(self.field, self.n, L, over=self.over)
        for key, (h, v) in out.items():
            if not v.is_zero():
                res._table[key] = (h, v)
        return res

    def to_json(self) -> dict:
        from .matalg import mat_to_json

        return {
            "n": self.n,
            "level": self.level,
            "over": self.over,
            "support": [{"rep": mat_to_json(g), "val": v.to_json()} for g, v in self.items()],
        }

    @classmethod
    def from_json(cls, field: LocalField, obj) -> "GroupFn":
        from .matalg import mat_from_json

        over = obj.get("over", "F")
        entries = []
        for e in obj["support"]:
            g = mat_from_json(field, e["rep"])
            val = CycValue.from_json(e["val"]) if isinstance(e["val"], dict) else Fraction(e["val"])
            entries.append((g, val))
        return cls(field, int(obj["n"]), int(obj["level"]), entries, over)

    @classmethod
    def spherical(cls, field: LocalField, exps, over: str = "F") -> "GroupFn":
        """Indicator of K diag(p^e_1, ..., p^e_n) K (K = GL_n(O), n = len(exps))."""
        if over != "F":
            raise ValueError("spherical functions are provided over F")
        n = len(exps)
        d = Mat([[Fraction(field.p) ** exps[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)])
        depth = max(exps) - min(exps)
        f = cls(field, n, 0, over=over)
        for kap in k_reps(Ring(field, False), n, 0, depth):
            g = kap * d
            if f(g).is_zero():
                f._add(g, 1)
        return f

    @classmethod
    def unramified(cls, field: LocalField, n: int, over: str = "F") -> "GroupFn":
        """1/Vol(GL_n(O)) times the indicator of GL_n(O)."""
        f = cls(field, n, 0, over=over)
        one = field.one() if over == "E" else Fraction(1)
        f._add(Mat.identity(n, one), CycValue.one())
        return f.scale(1 / f.coset_volume())


def _unit_generators(p: int, L: int) -> list:
    """Topological generators of 1 + p^L Z_p (of Z_p^x when L = 0)."""
    if p == 2:
        if L <= 1:
            return [Fraction(-1), Fraction(5)]
        return [Fraction(1 + 2**L)]
    if L >= 1:
        return [Fraction(1 + p**L)]
    mod = p * p
    for g in range(2, mod):
        if g % p == 0:
            continue
        order, x = 1, g
        while x != 1:
            x = x * g % mod
            order += 1
        if order == p * (p - 1):
            return [Fraction(g)]
    raise AssertionError("no primitive root")


def _k_generators(p: int, n: int, L: int) -> list:
    """Topological generators of K_L inside GL_n(Z_p)."""
    out = []
    step = Fraction(p) ** L
    for i in range(n):
        for j in range(n):
            if i != j:
                m = Mat.identity(n)
                rows = [list(r) for r in m.rows]
                rows[i][j] = step
                out.append(Mat(rows))
    for u in _unit_generators(p, L):
        for i in range(n):
            rows = [[Fraction(1) if a == b else Fraction(0) for b in range(n)] for a in range(n)]
            rows[i][i] = u
            out.append(Mat(rows))
    return out


def _pair_mat(field: LocalField, a: Mat, b: Mat) -> Mat:
    return Mat([[field.E(a.rows[i][j], b.rows[i][j]) for j in range(a.n)] for i in range(a.n)])


def f_tilde(f1: GroupFn, f2: GroupFn, budget: int = 200000) -> GroupFn:
    """f~(g) = int_{GL_n(E)} f1(g h) f2(conj(h)) dh for f' = f1 (x) f2.

    Substituting t = conj(h) gives a finite sum over the cosets t K of f2:
    f~(g) = vol(K) sum_t f2(t) f1(g conj(t)).  The result is right
    invariant at level k + (spread of the t's) and is supported on the
    cosets c kappa conj(t)^-1 with c in supp f1 and kappa in K_k."""
    if f1.over != "E" or f2.over != "E" or f1.n != f2.n:
        raise ValueError("f~ takes two functions on the same GL_n(E)")
    field = f1.field
    k = max(f1.level, f2.level)
    f1 = f1.refine(k)
    f2 = f2.refine(k)
    n = f1.n
    vol = f2.coset_volume()
    spread = 0
    for t, _ in f2.items():
        spread = max(spread, -_vmin_mat(field, t) - _vmin_mat(field, t.inverse()))
    level = k + spread
    ring = f1._rings()
    kreps = list(k_reps(ring, n, k, level))
    out = GroupFn(field, n, level, over="E")
    seen = set()
    work = 0
    for c, _ in f1.items():
        for t, _ in f2.items():
            tbar_inv = t.conj().inverse()
            comps_c = c.components() if field.split else [c]
            if field.split:
                cands = [
                    _pair_mat(field, comps_c[0] * r1 * tbar_inv.components()[0], comps_c[1] * r2 * tbar_inv.components()[1])
                    for r1 in kreps for r2 in kreps
                ]
            else:
                cands = [c * r * tbar_inv for r in kreps]
            for g in cands:
                work += 1
                if work > budget:
                    raise RuntimeError(f"f~ support exceeds the coset budget of {budget}")
                key = out.key(g)
                if key in seen:
                    continue
                seen.add(key)
                val = CycValue.zero()
                for t2, v2 in f2.items():
                    val = val + v2 * f1(g * t2.conj())
                if not val.is_zero():
                    out._table[key] = (g, val * vol)
    return out
