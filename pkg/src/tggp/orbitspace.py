"""Orbit representatives on both sides, the invariants of M_n(E),
matching, transfer factors, Kottwitz predicates and the embeddings into
gl_{n+1} and the Hermitian Lie algebra used for the unramified reduction."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .cyclotomic import CycValue
from .localfield import ExtElement, LocalField, as_fraction
from .matalg import (
    Mat,
    SkewHermForm,
    embed_mat,
    express_in_norm_powers,
    is_full_rank,
    is_normal_gl,
    is_normal_u,
    is_rss_matrix,
    mat_from_json,
    mat_to_json,
    norm_map,
    poly_eval,
    solve_linear,
)


@dataclass(frozen=True)
class MTriple:
    """A point [xi, x, y] of Mat_n x Mat_{1,n} x Mat_{n,1} over E."""

    xi: Mat
    x: Mat
    y: Mat

    @property
    def n(self) -> int:
        return self.xi.n

    def act(self, h: Mat) -> "MTriple":
        hi = h.inverse()
        return MTriple(hi * self.xi * h, self.x * h, hi * self.y)

    def row_stack(self) -> Mat:
        rows = []
        v = self.x
        for _ in range(self.n):
            rows.append(v.rows[0])
            v = v * self.xi
        return Mat(rows)

    def col_stack(self) -> Mat:
        cols = []
        v = self.y
        for _ in range(self.n):
            cols.append([r[0] for r in v.rows])
            v = self.xi * v
        return Mat(cols).T


def invariants(m: MTriple):
    """(a_1..a_n, b_1..b_n): a_i = Tr wedge^i xi, b_i = x xi^(i-1) y."""
    n = m.n
    c = m.xi.charpoly()
    a = [c[n - i] * (-1) ** i for i in range(1, n + 1)]
    b = []
    v = m.y
    for _ in range(n):
        b.append((m.x * v).rows[0][0])
        v = m.xi * v
    return a, b


def is_rss_mtriple(m: MTriple) -> bool:
    return is_rss_matrix(m.xi) and is_full_rank(m.row_stack()) and is_full_rank(m.col_stack())


@dataclass(frozen=True)
class GLOrbitRep:
    """[gamma, x, y] with gamma normal, x over F and y purely imaginary."""

    gamma: Mat
    x: Mat
    y: Mat

    def __post_init__(self):
        if not self.gamma.is_invertible():
            raise ValueError("gamma must be invertible")
        if not is_normal_gl(self.gamma):
            raise ValueError("gamma is not normal")
        if not self.x.is_base():
            raise ValueError("x must have entries in F")
        if not all(e.is_imaginary() for e in self.y.entries()):
            raise ValueError("y must have purely imaginary entries")

    @property
    def n(self) -> int:
        return self.gamma.n

    def to_json(self) -> dict:
        return {"gamma": mat_to_json(self.gamma), "x": mat_to_json(self.x), "y": mat_to_json(self.y)}

    @classmethod
    def from_json(cls, field: LocalField, obj) -> "GLOrbitRep":
        return cls(*(mat_from_json(field, obj[k]) for k in ("gamma", "x", "y")))


@dataclass(frozen=True)
class UOrbitRep:
    """[zeta, z] relative to the skew-Hermitian form beta."""

    zeta: Mat
    z: Mat
    beta: SkewHermForm

    def __post_init__(self):
        if not self.zeta.is_invertible():
            raise ValueError("zeta must be invertible")
        if not is_normal_u(self.zeta, self.beta):
            raise ValueError("zeta is not normal with respect to beta")

    @property
    def n(self) -> int:
        return self.zeta.n

    def hermitian_norm(self) -> Mat:
        return self.beta.twist(self.zeta) * self.zeta

    def to_json(self) -> dict:
        return {"zeta": mat_to_json(self.zeta), "z": mat_to_json(self.z), "beta": self.beta.to_json()}

    @classmethod
    def from_json(cls, field: LocalField, obj) -> "UOrbitRep":
        return cls(
            mat_from_json(field, obj["zeta"]),
            mat_from_json(field, obj["z"]),
            SkewHermForm(mat_from_json(field, obj["beta"])),
        )


def gl_to_mtriple(r: GLOrbitRep) -> MTriple:
    return MTriple(norm_map(r.gamma), r.x, r.y)


def u_to_mtriple(r: UOrbitRep) -> MTriple:
    binv = r.beta.beta.inverse()
    return MTriple(r.hermitian_norm(), r.z, binv * r.z.star())


def orbits_match(g: GLOrbitRep, u: UOrbitRep) -> bool:
    mg, mu = gl_to_mtriple(g), u_to_mtriple(u)
    if not is_rss_mtriple(mg) or not is_rss_mtriple(mu):
        raise ValueError("matching is only defined for regular semisimple orbits")
    return invariants(mg) == invariants(mu)


def transfer_factor(field: LocalField, m: MTriple) -> CycValue:
    """mu(det of the stacked rows x, x xi, ..., x xi^(n-1))."""
    t = m.row_stack().det()
    if not isinstance(t, ExtElement):
        t = field.embed(t)
    if not t.is_invertible():
        raise ValueError("the stacked rows are singular; the triple is not rss")
    return field.mu(t)


# ---------------------------------------------------------------------------
# Kottwitz predicates


def _integral_conjugate_exists(field: LocalField, delta: Mat) -> bool:
    """For rss delta: some conjugate lies in GL_n(O) iff the characteristic
    polynomial is integral with unit constant term (companion matrix)."""
    c = delta.charpoly()
    return all(field.is_integral(x) for x in c) and field.is_unit(c[0])


def _all_integral(field: LocalField, coeffs) -> bool:
    return all(field.is_integral(c) for c in coeffs)


def is_kottwitz(field: LocalField, gamma: Mat) -> bool:
    if field.split:
        raise ValueError("the Kottwitz condition is stated for inert places")
    delta = norm_map(gamma)
    if not delta.is_base():
        raise ValueError("gamma is not normal")
    coeffs = express_in_norm_powers(gamma, delta)
    if coeffs is None:
        raise AssertionError("normal gamma with rss norm must lie in E[norm]")
    return _all_integral(field, coeffs) or not _integral_conjugate_exists(field, delta)


def is_kottwitz_u(field: LocalField, zeta: Mat, beta: SkewHermForm) -> bool:
    """Kottwitz with respect to beta.  The second clause is decided over
    GL_n(E) rather than U_n^beta(F)."""
    if field.split:
        raise ValueError("the Kottwitz condition is stated for inert places")
    delta = beta.twist(zeta) * zeta
    if not is_normal_u(zeta, beta):
        raise ValueError("zeta is not normal with respect to beta")
    coeffs = express_in_norm_powers(zeta, delta)
    if coeffs is None:
        raise AssertionError("normal zeta with rss norm must lie in E[norm]")
    return _all_integral(field, coeffs) or not _integral_conjugate_exists(field, delta)


def is_k_kottwitz_split(field: LocalField, gamma: Mat, k: int) -> bool:
    """gamma_1 = sum c_i (gamma_2 gamma_1)^i, c_0 in 1 + p^k O, c_i in p^k O."""
    if not field.split:
        raise ValueError("k-Kottwitz is a split-place notion")
    g1, g2 = gamma.components()
    delta = g2 * g1
    if not is_rss_matrix(delta):
        raise ValueError("gamma_2 gamma_1 is not regular semisimple")
    n = g1.n
    powers = [delta**i for i in range(n)]
    a = Mat([[list(pw.entries())[r] for pw in powers] for r in range(n * n)])
    c = solve_linear(None, a, list(g1.entries()))
    if c is None:
        return False
    if field.val(c[0] - 1) < k:
        return False
    return all(field.val(ci) >= k for ci in c[1:])


def compatible_unitary_rep(field: LocalField, gamma: Mat, beta: SkewHermForm, h: Mat) -> Mat:
    """zeta = h^-1 gamma h, checked against beta^-1 zeta* beta = h^-1 conj(gamma) h."""
    hi = h.inverse()
    zeta = hi * gamma * h
    if beta.twist(zeta) != hi * gamma.conj() * h:
        raise AssertionError("gamma, beta and h do not satisfy the norm-conjugacy hypothesis")
    return zeta


# ---------------------------------------------------------------------------
# embeddings into n+1 by n+1 matrices


@dataclass(frozen=True)
class Gl1Embedding:
    """The block matrix [[N, v], [w, d]] on the GL side ('gl') or the
    unitary side ('u')."""

    A: Mat
    d: Fraction
    side: str

    @property
    def n(self) -> int:
        return self.A.n - 1

    def blocks(self):
        n = self.n
        rows = self.A.rows
        top = Mat([r[:n] for r in rows[:n]])
        w = Mat([rows[n][:n]])
        v = Mat([[r[n]] for r in rows[:n]])
        return top, w, v


def _block(top: Mat, v: Mat, w: Mat, d) -> Mat:
    rows = [list(top.rows[i]) + [v.rows[i][0]] for i in range(top.n)]
    rows.append(list(w.rows[0]) + [d])
    return Mat(rows)


def embed_gl_to_gln1(field: LocalField, r: GLOrbitRep, d) -> Gl1Embedding:
    d = as_fraction(d)
    if field.val(d) < 0:
        raise ValueError("the corner entry d must be integral")
    delta = norm_map(r.gamma)
    jy = r.y * field.j
    A = _block(delta, jy, r.x, field.embed(d))
    if not A.is_base():
        raise AssertionError("the GL-side block matrix must be defined over F")
    return Gl1Embedding(A.base_part(), d, "gl")


def embed_u_to_hn1(field: LocalField, r: UOrbitRep, d) -> Gl1Embedding:
    d = as_fraction(d)
    if field.val(d) < 0:
        raise ValueError("the corner entry d must be integral")
    if not r.beta.is_scalar_j(field):
        raise ValueError("the unitary-side embedding is implemented for beta = j * identity")
    A = _block(r.hermitian_norm(), r.z.star(), r.z, field.embed(d))
    bn1 = Mat.identity(r.n + 1, field.one()) * field.j
    if A.star() != bn1 * A * bn1.inverse():
        raise AssertionError("A' is not in the twisted Hermitian Lie algebra")
    return Gl1Embedding(A, d, "u")


def embedding_triple(field: LocalField, e: Gl1Embedding) -> MTriple:
    top, w, v = e.blocks()
    return MTriple(embed_mat(field, top), embed_mat(field, w), embed_mat(field, v))


def is_relatively_rss(field: LocalField, e: Gl1Embedding) -> bool:
    """Tested as regular semisimplicity of the triple (top block, bottom row, last column)."""
    return is_rss_mtriple(embedding_triple(field, e))


def choose_corner(field: LocalField, r, side: str = "gl"):
    """First d in 0..p-1 making the embedding relatively rss."""
    embed = embed_gl_to_gln1 if side == "gl" else embed_u_to_hn1
    for d in range(field.p):
        e = embed(field, r, d)
        if is_relatively_rss(field, e):
            return Fraction(d)
    raise ValueError(f"no corner entry among the {field.p} candidates gives a relatively rss matrix")


def lie_match(field: LocalField, gl_data, u_data, beta: SkewHermForm) -> bool:
    """[A, x, y] against [A', z]: same invariants as [A', z, beta^-1 z*]."""
    A, x, y = (embed_mat(field, m) for m in gl_data)
    Ap, z = u_data
    m1 = MTriple(A, x, y)
    m2 = MTriple(Ap, z, beta.beta.inverse() * z.star())
    if not is_rss_mtriple(m1) or not is_rss_mtriple(m2):
        raise ValueError("matching is only defined for regular semisimple data")
    return invariants(m1) == invariants(m2)


# ---------------------------------------------------------------------------
# local Kottwitz elements


@dataclass(frozen=True)
class ApproxKottwitz:
    gamma: Mat
    precision: int
    exact: bool


def find_local_kottwitz(field: LocalField, delta: Mat, N: int = 4) -> ApproxKottwitz:
    """A Kottwitz gamma with Nm(gamma) = delta (exactly when split, modulo p^N
    when inert, found by digit-by-digit lifting inside O_E[delta])."""
    if field.split:
        base = delta.components()[0] if isinstance(delta.rows[0][0], ExtElement) else delta
        n = base.n
        rows = [
            [field.E(1 if i == k else 0, base.rows[i][k]) for k in range(n)]
            for i in range(n)
        ]
        gamma = Mat(rows)
        return ApproxKottwitz(gamma, N, True)
    dF = delta.base_part() if isinstance(delta.rows[0][0], ExtElement) else delta
    if not is_rss_matrix(dF):
        raise ValueError("delta must be regular semisimple")
    if not _integral_conjugate_exists(field, embed_mat(field, dF)):
        raise ValueError("delta has no integral conjugate")
    dE = embed_mat(field, dF)
    n = dE.n
    p = field.p

    def residual_ok(coeffs, k):
        g = poly_eval(coeffs, dE)
        diff = norm_map(g) - dE
        return all(field.val(x) >= k for x in diff.entries() if not x.is_zero())

    from .lattice import Ring
    import itertools

    ring = Ring(field, True)
    digits = sorted(ring.residues(1), key=lambda e: (not e.is_zero(), e != 1))
    # sparse candidates first, so that delta = 1 returns gamma = 1
    cands = sorted(
        itertools.product(range(len(digits)), repeat=n),
        key=lambda ix: (sum(1 for i in ix if i), [-(i == 1) for i in ix], ix),
    )
    sols = [
        [digits[i] for i in ix]
        for ix in cands
        if _nonsingular([digits[i] for i in ix], dE) and residual_ok([digits[i] for i in ix], 1)
    ]
    if not sols:
        raise ValueError("delta is not a norm at the residue level")
    coeffs = sols[0]
    for k in range(1, N):
        if residual_ok(coeffs, N):
            break
        pk = Fraction(p) ** k
        for eps in itertools.product(digits, repeat=n):
            trial = [c + e * pk for c, e in zip(coeffs, eps)]
            if residual_ok(trial, k + 1):
                coeffs = trial
                break
        else:
            raise ValueError(f"lifting failed at precision p^{k + 1}")
    return ApproxKottwitz(poly_eval(coeffs, dE), N, False)


def _nonsingular(coeffs, dE: Mat) -> bool:
    try:
        return poly_eval(list(coeffs), dE).is_invertible()
    except ZeroDivisionError:
        return False
