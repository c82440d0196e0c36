"""Orbital-integral engines.

The unramified engines evaluate the reductions to lattice counts: on the
GL side a signed count of O_F-lattices L in F^n (columns) with
delta L <= L, j y in L and x L <= O; on the unitary side the number of
self-dual O_E-lattices stable under zeta* zeta and containing z*.  Both
families are trapped between an explicit pair of lattices, so the
enumeration is finite and complete.

The general engines evaluate the defining double integrals as finite
coset sums.  At split places they handle n <= 2 with product test data;
at inert places they handle n = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .cyclotomic import CycValue
from .lattice import (
    Ring,
    contains_lattice,
    dual,
    echelon,
    index_valuation,
    scale,
    sublattices_between,
)
from .localfield import ExtElement, LaurentValue, LocalField, as_fraction, vol_gl, vol_u
from .matalg import Mat, express_in_norm_powers, norm_map, solve_linear, vec
from .orbitspace import (
    GLOrbitRep,
    UOrbitRep,
    embed_gl_to_gln1,
    embed_u_to_hn1,
    gl_to_mtriple,
    is_kottwitz,
    is_kottwitz_u,
    is_rss_mtriple,
    u_to_mtriple,
)
from .schwartz import (
    GroupFn,
    LatticeFn,
    Pullback,
    SplitProduct,
    _pair_mat,
    _vmin_mat,
    ddagger_at,
    k_index,
    k_reps,
    pft_dagger_at,
    split_dagger_at,
    to_coords,
    weil_pullback,
)

DEFAULT_BUDGET = 200000


@dataclass
class OrbResult:
    value: LaurentValue
    enumerated: int
    bound_used: int
    complete: bool

    def at_one(self) -> CycValue:
        return self.value.at_one()

    def to_json(self) -> dict:
        return {
            "value": self.value.to_json(),
            "value_at_s_half": self.at_one().to_json(),
            "enumerated": self.enumerated,
            "bound_used": self.bound_used,
            "complete": self.complete,
        }


class BudgetExceeded(RuntimeError):
    pass


def _zero_result() -> OrbResult:
    return OrbResult(LaurentValue(), 0, 0, True)


def _is_integral_mat(field: LocalField, m: Mat) -> bool:
    return all(field.is_integral(e) for e in m.entries())


def _cols(m: Mat) -> list:
    return [tuple(m.rows[i][j] for i in range(m.shape[0])) for j in range(m.shape[1])]


def _basis_matrix(basis) -> Mat:
    """Matrix whose columns are the basis vectors."""
    n = len(basis)
    return Mat([[basis[j][i] for j in range(n)] for i in range(n)])


def _krylov_cols(delta: Mat, v: Mat) -> list:
    out = []
    for _ in range(delta.n):
        out.append(tuple(r[0] for r in v.rows))
        v = delta * v
    return out


def _krylov_rows(x: Mat, delta: Mat) -> list:
    out = []
    for _ in range(delta.n):
        out.append(tuple(x.rows[0]))
        x = x * delta
    return out


# ---------------------------------------------------------------------------
# unramified engines


def orb_gl_unramified(field: LocalField, r: GLOrbitRep, d=0, s_formal: bool = False, budget: int = DEFAULT_BUDGET) -> OrbResult:
    """Orb(s, [gamma, x, y], f', phi') for the unramified test functions.

    Equals 1(det Nm gamma unit) times the sum over lattices L = g O^n with
    g^-1 A g integral (A the (n+1)-block matrix with corner d) of
    eta(det g) t^val(det g).
    """
    if field.split:
        raise ValueError("the unramified GL engine is for inert places")
    m = gl_to_mtriple(r)
    if not is_rss_mtriple(m):
        raise ValueError("orbit is not regular semisimple")
    if not is_kottwitz(field, r.gamma):
        raise ValueError("gamma is not Kottwitz; the lattice reduction does not apply")
    A = embed_gl_to_gln1(field, r, d).A
    n = r.n
    top = Mat([row[:n] for row in A.rows[:n]])
    if not field.is_unit(top.det()):
        return _zero_result()
    ring = Ring(field, False)
    x = Mat([A.rows[n][:n]])
    jy = Mat([[A.rows[i][n]] for i in range(n)])
    L0 = echelon(ring, _krylov_cols(top, jy))
    L1 = dual(ring, _krylov_rows(x, top))
    bound = index_valuation(ring, L0) - index_valuation(ring, L1)
    if not contains_lattice(ring, L1, L0):
        return OrbResult(LaurentValue(), 0, bound, True)
    total = {}
    count = 0
    for L in sublattices_between(ring, L0, L1):
        count += 1
        if count > budget:
            return OrbResult(LaurentValue(total), count, bound, False)
        g = _basis_matrix(L)
        big = _block_diag_one(g)
        if not _is_integral_mat(field, big.inverse() * A * big):
            continue
        _check_kottwitz_integrality(field, r.gamma, g)
        v = field.val(g.det())
        e = v if s_formal else 0
        total[e] = total.get(e, 0) + (-1) ** (v % 2)
    return OrbResult(LaurentValue(total), count, bound, True)


def _block_diag_one(g: Mat) -> Mat:
    n = g.n
    rows = [list(g.rows[i]) + [Fraction(0)] for i in range(n)]
    rows.append([Fraction(0)] * n + [Fraction(1)])
    return Mat(rows)


def _check_kottwitz_integrality(field: LocalField, gamma: Mat, g: Mat):
    """If g^-1 Nm(gamma) g is integral then so is g^-1 gamma g."""
    gE = g.map(field.embed)
    conj = gE.inverse() * gamma * gE
    if not _is_integral_mat(field, conj):
        raise AssertionError("Kottwitz integrality fails on an enumerated lattice")


def _hermitian_dual(ring: Ring, basis):
    return dual(ring, [tuple(e.conj() for e in v) for v in basis])


def orb_u_unramified(field: LocalField, r: UOrbitRep, d=0, budget: int = DEFAULT_BUDGET) -> OrbResult:
    """Orb([zeta, z]^beta+, f, phi_1 (x) phi_2) for unramified data.

    Counts self-dual O_E-lattices Lambda = h O_E^n with h^-1 A' h integral.
    """
    if field.split:
        raise ValueError("the unramified unitary engine is for inert places")
    if not r.beta.is_scalar_j(field):
        raise ValueError("the unramified unitary engine needs beta = j * identity")
    m = u_to_mtriple(r)
    if not is_rss_mtriple(m):
        raise ValueError("orbit is not regular semisimple")
    if not is_kottwitz_u(field, r.zeta, r.beta):
        raise ValueError("zeta is not Kottwitz with respect to beta")
    Ap = embed_u_to_hn1(field, r, d).A
    n = r.n
    delta = r.hermitian_norm()
    if any(not c.in_base() for c in delta.charpoly()):
        raise AssertionError("the characteristic polynomial of zeta* zeta is not defined over F")
    if not field.is_unit(delta.det()):
        return _zero_result()
    ring = Ring(field, True)
    w = r.z.star()
    L0 = echelon(ring, _krylov_cols(delta, w))
    L1 = _hermitian_dual(ring, L0)
    bound = index_valuation(ring, L0) - index_valuation(ring, L1)
    if not contains_lattice(ring, L1, L0):
        return OrbResult(LaurentValue(), 0, bound, True)
    count = 0
    hits = 0
    for L in sublattices_between(ring, L0, L1):
        count += 1
        if count > budget:
            return OrbResult(LaurentValue.constant(hits), count, bound, False)
        B = _basis_matrix(L)
        gram = B.star() * B
        if not _is_integral_mat(field, gram) or not field.is_unit(gram.det()):
            continue
        big = _block_diag_one_E(field, B)
        if not _is_integral_mat(field, big.inverse() * Ap * big):
            continue
        hits += 1
    return OrbResult(LaurentValue.constant(hits), count, bound, True)


def _block_diag_one_E(field: LocalField, g: Mat) -> Mat:
    n = g.n
    rows = [list(g.rows[i]) + [field.zero()] for i in range(n)]
    rows.append([field.zero()] * n + [field.one()])
    return Mat(rows)


# ---------------------------------------------------------------------------
# split places: matched test functions


class SplitTilde:
    """c * f1(g1) * f2(transpose(g2)) on GL_n(E) = GL_n(F) x GL_n(F)."""

    def __init__(self, field: LocalField, f1: GroupFn, f2: GroupFn, const):
        self.field = field
        self.f1 = f1
        self.f2 = f2
        self.const = CycValue.coerce(const)
        self.n = f1.n

    def __call__(self, g: Mat) -> CycValue:
        g1, g2 = g.components()
        a = self.f1(g1)
        if a.is_zero():
            return a
        return a * self.f2(g2.T) * self.const


def split_transfer_pair(field: LocalField, f1: GroupFn, f2: GroupFn, phi1: LatticeFn, phi2: LatticeFn):
    """(f~', phi') = (zeta_E(1)^-1 (f1 (x) transpose f2), phi1 (x) conj(phi2))."""
    if not field.split:
        raise ValueError("split transfer needs a split configuration")
    if f1.over != "F" or f2.over != "F":
        raise ValueError("f1 and f2 are functions on GL_n(F)")
    return SplitTilde(field, f1, f2, 1 / field.zeta_E1()), SplitProduct(field, phi1, phi2.conj())


@dataclass
class _Region:
    low: list
    high: list
    level: int
    bound: int


def _in_algebra(delta: Mat, a: Mat):
    n = delta.n
    powers = [delta**i for i in range(n)]
    cols = [vec(pw) for pw in powers]
    A = Mat([[cols[i][r] for i in range(n)] for r in range(n * n)])
    return solve_linear(None, A, vec(a))


def _split_region(field: LocalField, A1: Mat, A2: Mat, x, y0, f1: GroupFn, f2: GroupFn, phis, extra: int = 0) -> _Region:
    """Lattices M = O_n g1^-1 that can contribute, for integrands of the form
    f1(g1^-1 A1 g2) f2(transpose(g2^-1 A2 g1)) * [pair integral of phi's]."""
    ring = Ring(field, False)
    n = A1.n
    delta = A1 * A2
    if A1 * A2 != A2 * A1:
        raise ValueError("the split engines need commuting components")
    e1 = f1.vmin() + f2.vmin()
    c = _in_algebra(delta, A1)
    ci = _in_algebra(delta, A1.inverse())
    if c is None or ci is None:
        raise ValueError("A1 is not a polynomial in the product; the orbit is not regular semisimple")
    a1 = min(field.val(cv) + i * e1 for i, cv in enumerate(c) if cv != 0)
    a1i = min(field.val(cv) + i * e1 for i, cv in enumerate(ci) if cv != 0)
    (m1, k1), (m2, k2) = [(ph.m, ph.k) for ph in phis]
    v2 = field.val(Fraction(2))
    a_exp = max(m1, m2 - f1.vmin_inv() - a1) + v2
    b_exp = max(k1, k2 - f1.vmin() - a1i)
    slack = min(0, (n - 1) * e1)
    r1 = a_exp - slack
    r2 = b_exp - slack
    xm = Mat([list(x)])
    yc = Mat([[v] for v in y0])
    xspan = echelon(ring, _krylov_rows(xm, delta))
    ydual = dual(ring, _krylov_cols(delta, yc))
    # ``extra`` widens the sandwich on both ends; used to test the bound
    low = scale(ring, xspan, r1 + extra)
    high = scale(ring, ydual, -r2 - extra)
    level = max(f1.bi_level(), f2.bi_level(), m1 + k1, m2 + k2, 0)
    return _Region(low, high, level, r1 + r2 + 2 * extra)


def _split_outer(field: LocalField, region: _Region, n: int):
    """Coset representatives g1 K_L with O_n g1^-1 inside the region."""
    ring = Ring(field, False)
    if not contains_lattice(ring, region.high, region.low):
        return
    kreps = list(k_reps(ring, n, 0, region.level))
    for M in sublattices_between(ring, region.low, region.high):
        rowmat = Mat([list(v) for v in M])
        g1 = rowmat.inverse()
        for kap in kreps:
            yield g1 * kap


def _split_engine(field, A1, A2, x, y0, f1, f2, phis, integrand, weight, s_formal, budget, extra=0):
    n = A1.n
    region = _split_region(field, A1, A2, x, y0, f1, f2, phis, extra)
    ring = Ring(field, False)
    f1L = f1.refine(max(f1.level, 0))
    inner = list(k_reps(ring, n, f1.level, region.level))
    A1inv = A1.inverse()
    volL = vol_gl(n, field.q) / k_index(n, field.q, region.level)
    total = {}
    count = 0
    for g1 in _split_outer(field, region, n):
        for c, v1 in f1L.items():
            base = A1inv * g1 * c
            for kap in inner:
                g2 = base * kap
                count += 1
                if count > budget:
                    raise BudgetExceeded(f"split engine exceeded the budget of {budget} coset pairs")
                f2v = f2((g2.inverse() * A2 * g1).T)
                if f2v.is_zero():
                    continue
                val = integrand(g1, g2)
                if val.is_zero():
                    continue
                e = 0
                if s_formal:
                    e = field.val(g1.det()) + field.val(g2.det())
                term = val * v1 * f2v
                total[e] = total.get(e, CycValue.zero()) + term
    scale_ = weight * volL * volL
    value = LaurentValue({e: v * scale_ for e, v in total.items()})
    return OrbResult(value, count, region.bound, True)


def _split_gl(field: LocalField, r: GLOrbitRep, ftil: SplitTilde, phi: SplitProduct, s_formal, budget, widen=0) -> OrbResult:
    n = r.n
    if n > 2:
        raise ValueError("general engines are limited to n <= 2")
    g1c, g2c = r.gamma.components()
    x = [e.a for e in r.x.rows[0]]
    if any(e.a != e.b for e in r.x.rows[0]):
        raise ValueError("x must lie in F_n")
    y0 = [row[0].a for row in r.y.rows]

    def integrand(g1, g2):
        g = _pair_mat(field, g1, g2)
        return split_dagger_at(field, phi, g, x, y0).conj()

    return _split_engine(
        field, g1c, g2c, x, y0, ftil.f1, ftil.f2, (phi.phi_a, phi.phi_b),
        integrand, ftil.const, s_formal, budget, widen,
    )


def _split_u(field: LocalField, r: UOrbitRep, f1: GroupFn, f2: GroupFn, phi1: LatticeFn, phi2: LatticeFn, budget, widen=0) -> OrbResult:
    n = r.n
    if n > 2:
        raise ValueError("general engines are limited to n <= 2")
    beta = r.beta.beta
    expect = Mat.identity(n, field.E(1, -1))
    if beta != expect:
        raise ValueError("the split unitary engine uses beta = (1, -1)")
    z1c, z2c = r.zeta.components()
    z1 = [e.a for e in r.z.rows[0]]
    z2 = [e.b for e in r.z.rows[0]]

    def integrand(g1, h1):
        h = _pair_mat(field, h1, h1.T.inverse())
        zh = (r.z * h).rows[0]
        wphi1 = weil_pullback(field, h1.inverse() * g1, phi1).conj()
        return ddagger_at(field, phi2, wphi1, zh)

    weight = 1 / field.zeta_F1() ** 2
    return _split_engine(
        field, z1c, z2c.T, z1, z2, f1, f2, (phi1, phi2),
        integrand, weight, False, budget, widen,
    )


# ---------------------------------------------------------------------------
# inert n = 1


def _units_mod(field: LocalField, K: int):
    ring = Ring(field, True)
    return ring.units_mod(K) if K > 0 else [field.one()]


def _inert_gl_n1(field: LocalField, r: GLOrbitRep, ftil: GroupFn, phi: LatticeFn, s_formal, budget, widen=0) -> OrbResult:
    gamma = r.gamma.rows[0][0]
    x = r.x.rows[0][0].base_value()
    t = field.imaginary_coord(r.y.rows[0][0])
    if x == 0 or t == 0:
        raise ValueError("orbit is not regular semisimple")
    K = max(ftil.level, phi.m + phi.k, 0)
    lo = -phi.m - field.val(x) - widen
    hi = phi.k + field.val(t) + widen
    units = _units_mod(field, K)
    vol = Fraction(1, len(units))
    total = {}
    count = 0
    for a in range(lo, hi + 1):
        pa = Fraction(field.p) ** a
        for u in units:
            count += 1
            if count > budget:
                raise BudgetExceeded(f"inert engine exceeded the budget of {budget} cosets")
            g = u * pa
            fv = ftil(Mat([[gamma * g.conj() / g]]))
            if fv.is_zero():
                continue
            dv = pft_dagger_at(field, phi, [x], [t], Mat([[g]]))
            if dv.is_zero():
                continue
            e = a if s_formal else 0
            total[e] = total.get(e, CycValue.zero()) + fv * dv.conj() * vol
    return OrbResult(LaurentValue(total), count, hi - lo + 1, True)


def _norm_one_mod(field: LocalField, K: int):
    """Residues mod p^K of the norm-one units of O_E."""
    if K == 0:
        return [field.one()]
    mod = field.p**K
    out = []
    for u in Ring(field, True).units_mod(K):
        nm = u.norm()
        if (nm - 1).numerator % mod == 0:
            out.append(u)
    return out


def _inert_u_n1(field: LocalField, r: UOrbitRep, f: GroupFn, phi1: LatticeFn, phi2: LatticeFn, budget) -> OrbResult:
    basic = LatticeFn.basic(field, "F", 1)
    for ph in (phi1, phi2):
        if ph.refine(max(ph.m, 0), max(ph.k, 0)) != basic.refine(max(ph.m, 0), max(ph.k, 0)):
            raise NotImplementedError("the inert unitary engine supports only the basic vector")
    zeta = r.zeta.rows[0][0]
    z = r.z.rows[0][0]
    K = max(f.level, 0)
    reps = _norm_one_mod(field, K)
    vol = vol_u(1, field.q) / len(reps)
    total = CycValue.zero()
    count = 0
    for g in reps:
        for h in reps:
            count += 1
            if count > budget:
                raise BudgetExceeded(f"inert unitary engine exceeded the budget of {budget} cosets")
            fv = f(Mat([[zeta * h / g]]))
            if fv.is_zero():
                continue
            # omega(h^-1 g) fixes the basic vector since U_1 is compact
            total = total + fv * ddagger_at(field, phi2, phi1.conj(), [z * h]) * vol * vol
    return OrbResult(LaurentValue.constant(total), count, K, True)


# ---------------------------------------------------------------------------
# public general engines


def orb_gl_general(field: LocalField, r: GLOrbitRep, ftil, phi, s_formal: bool = False, budget: int = DEFAULT_BUDGET, widen: int = 0) -> OrbResult:
    """Orb(s, [gamma, x, y], f', phi') from the definition.

    ``ftil`` is f~' (a SplitTilde at split places, a GroupFn over E at
    inert places) and ``phi`` is phi' (a SplitProduct or a LatticeFn)."""
    if r.n > 2:
        raise ValueError("general engines are limited to n <= 2")
    if not is_rss_mtriple(gl_to_mtriple(r)):
        raise ValueError("orbit is not regular semisimple")
    if field.split:
        if not isinstance(ftil, SplitTilde) or not isinstance(phi, SplitProduct):
            raise ValueError("split GL engine expects the output of split_transfer_pair")
        if ftil.f1.is_zero() or ftil.f2.is_zero():
            return _zero_result()
        return _split_gl(field, r, ftil, phi, s_formal, budget, widen)
    if r.n != 1:
        raise NotImplementedError("the inert general GL engine is implemented for n = 1")
    if isinstance(phi, LatticeFn) and phi.is_zero():
        return _zero_result()
    return _inert_gl_n1(field, r, ftil, phi, s_formal, budget, widen)


def orb_u_general(field: LocalField, r: UOrbitRep, f, phis, budget: int = DEFAULT_BUDGET, widen: int = 0) -> OrbResult:
    """Orb([zeta, z], f, phi_1 (x) phi_2) from the definition.

    At split places ``f`` is a pair (f1, f2) of functions on GL_n(F)
    meaning f(g, g') = f1(g) f2(g'); at inert places it is a GroupFn on E^x."""
    phi1, phi2 = phis
    if r.n > 2:
        raise ValueError("general engines are limited to n <= 2")
    if not is_rss_mtriple(u_to_mtriple(r)):
        raise ValueError("orbit is not regular semisimple")
    if field.split:
        f1, f2 = f
        if f1.is_zero() or f2.is_zero():
            return _zero_result()
        return _split_u(field, r, f1, f2, phi1, phi2, budget, widen)
    if r.n != 1:
        raise NotImplementedError("the inert general unitary engine is implemented for n = 1")
    if f.is_zero():
        return _zero_result()
    return _inert_u_n1(field, r, f, phi1, phi2, budget)
