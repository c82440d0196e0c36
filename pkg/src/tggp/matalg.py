"""Matrices over F and E: involutions, the norm map, sigma-conjugation,
normality, skew-Hermitian forms and exact linear algebra."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .localfield import ExtElement, LocalField, as_fraction


def _conj(x):
    return x.conj() if isinstance(x, ExtElement) else x


def _is_zero(x) -> bool:
    return x.is_zero() if isinstance(x, ExtElement) else x == 0


class Mat:
    """A dense matrix whose entries are Fractions or ExtElements."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = tuple(tuple(r) for r in rows)
        widths = {len(r) for r in self.rows}
        if len(widths) > 1:
            raise ValueError("ragged matrix")

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    @property
    def n(self) -> int:
        r, c = self.shape
        if r != c:
            raise ValueError(f"matrix of shape {self.shape} is not square")
        return r

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def entries(self):
        for r in self.rows:
            yield from r

    def _sample(self):
        return self.rows[0][0]

    def _zero(self):
        return self._sample() * 0

    def _one(self):
        return self._sample() * 0 + 1

    @classmethod
    def identity(cls, n: int, one=Fraction(1)) -> "Mat":
        zero = one * 0
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, values) -> "Mat":
        values = list(values)
        zero = values[0] * 0
        return cls([[values[i] if i == j else zero for j in range(len(values))] for i in range(len(values))])

    def identity_like(self) -> "Mat":
        return Mat.identity(self.n, self._one())

    def map(self, fn) -> "Mat":
        return Mat([[fn(x) for x in r] for r in self.rows])

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Mat([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other):
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Mat([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self):
        return self.map(lambda x: -x)

    def __mul__(self, other):
        if isinstance(other, Mat):
            r1, c1 = self.shape
            r2, c2 = other.shape
            if c1 != r2:
                raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
            cols = list(zip(*other.rows))
            out = []
            for row in self.rows:
                new = []
                for col in cols:
                    acc = row[0] * col[0]
                    for a, b in zip(row[1:], col[1:]):
                        acc = acc + a * b
                    new.append(acc)
                out.append(new)
            return Mat(out)
        return self.map(lambda x: x * other)

    def __rmul__(self, other):
        return self.map(lambda x: other * x)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = self.identity_like()
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Mat):
            return NotImplemented
        return self.shape == other.shape and all(
            a == b for a, b in zip(self.entries(), other.entries())
        )

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return "Mat(" + repr([list(r) for r in self.rows]) + ")"

    # involutions --------------------------------------------------------------
    @property
    def T(self) -> "Mat":
        return Mat(list(zip(*self.rows)))

    def conj(self) -> "Mat":
        return self.map(_conj)

    def star(self) -> "Mat":
        return self.conj().T

    # invariants ----------------------------------------------------------------
    def trace(self):
        acc = self.rows[0][0]
        for i in range(1, self.n):
            acc = acc + self.rows[i][i]
        return acc

    def _faddeev(self):
        n = self.n
        ident = self.identity_like()
        coeffs = [None] * (n + 1)
        coeffs[n] = self._one()
        m = self * self._zero()
        for k in range(1, n + 1):
            m = self * m + ident * coeffs[n - k + 1]
            coeffs[n - k] = -(self * m).trace() / k
        return coeffs, m

    def charpoly(self) -> list:
        """Coefficients c_0..c_n (low to high) of det(X - A)."""
        return self._faddeev()[0]

    def det(self):
        c = self.charpoly()
        return c[0] if self.n % 2 == 0 else -c[0]

    def inverse(self) -> "Mat":
        coeffs, m = self._faddeev()
        c0 = coeffs[0]
        if isinstance(c0, ExtElement):
            if not c0.is_invertible():
                raise ZeroDivisionError("singular matrix")
            inv = c0.inverse()
            return m * (-inv)
        if c0 == 0:
            raise ZeroDivisionError("singular matrix")
        return m * (-1 / c0)

    def is_invertible(self) -> bool:
        d = self.det()
        return d.is_invertible() if isinstance(d, ExtElement) else d != 0

    def is_base(self) -> bool:
        """All entries fixed by sigma."""
        return all(x.in_base() if isinstance(x, ExtElement) else True for x in self.entries())

    def base_part(self) -> "Mat":
        return self.map(lambda x: x.base_value() if isinstance(x, ExtElement) else x)

    def components(self) -> list:
        """Split case: [left, right] as F-matrices.  Inert/F: [self]."""
        x = self._sample()
        if isinstance(x, ExtElement) and x.split:
            return [self.map(lambda e: e.a), self.map(lambda e: e.b)]
        return [self]


def mat(field: LocalField, rows) -> Mat:
    """Build a matrix over E from nested numbers or (a, b) pairs."""

    def conv(x):
        if isinstance(x, ExtElement):
            return x
        if isinstance(x, tuple):
            return field.E(*x)
        return field.embed(x)

    return Mat([[conv(x) for x in r] for r in rows])


def fmat(rows) -> Mat:
    return Mat([[as_fraction(x) for x in r] for r in rows])


def embed_mat(field: LocalField, m: Mat) -> Mat:
    return m.map(lambda x: x if isinstance(x, ExtElement) else field.embed(x))


def row(field: LocalField, values) -> Mat:
    return mat(field, [list(values)])


def col(field: LocalField, values) -> Mat:
    return mat(field, [[v] for v in values])


# ---------------------------------------------------------------------------
# linear algebra over a field (Fractions or inert ExtElements)


def _field_rank(rows) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if not _is_zero(rows[i][c])), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = 1 / rows[rank][c]
        for i in range(len(rows)):
            if i != rank and not _is_zero(rows[i][c]):
                f = rows[i][c] * inv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def rank(m: Mat):
    """Rank over E; a pair of ranks in the split case."""
    comps = m.components()
    ranks = tuple(_field_rank(c.rows) for c in comps)
    return ranks if len(ranks) > 1 else ranks[0]


def is_full_rank(m: Mat) -> bool:
    r = rank(m)
    k = min(m.shape)
    return all(x == k for x in r) if isinstance(r, tuple) else r == k


def _field_solve(a_rows, b):
    """Unique solution of A c = b (A with independent columns), else None."""
    rows = [list(r) + [v] for r, v in zip(a_rows, b)]
    ncols = len(a_rows[0])
    r = 0
    pivcols = []
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if not _is_zero(rows[i][c])), None)
        if piv is None:
            return None
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not _is_zero(rows[i][c]):
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivcols.append(c)
        r += 1
    if any(not _is_zero(rows[i][-1]) for i in range(r, len(rows))):
        return None
    return [rows[i][-1] for i in range(ncols)]


def solve_linear(field: LocalField | None, a: Mat, b: list):
    """Solve a c = b for c over E (componentwise when split) or over F."""
    sample = a.rows[0][0]
    if isinstance(sample, ExtElement) and sample.split:
        left = _field_solve(a.map(lambda e: e.a).rows, [v.a for v in b])
        right = _field_solve(a.map(lambda e: e.b).rows, [v.b for v in b])
        if left is None or right is None:
            return None
        return [ExtElement(x, y, sample.eps, True) for x, y in zip(left, right)]
    return _field_solve(a.rows, b)


# ---------------------------------------------------------------------------
# polynomials (low to high coefficient lists)


def _poly_trim(p):
    p = list(p)
    while len(p) > 1 and _is_zero(p[-1]):
        p.pop()
    return p


def _poly_mod(a, b):
    a = _poly_trim(a)
    b = _poly_trim(b)
    inv = 1 / b[-1]
    while len(a) >= len(b) and not (len(a) == 1 and _is_zero(a[0])):
        f = a[-1] * inv
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] = a[shift + i] - f * c
        a = _poly_trim(a[:-1]) if len(a) > 1 else a
        if len(a) == 1 and _is_zero(a[0]):
            break
    return a


def _poly_degree_gcd(a, b) -> int:
    a, b = _poly_trim(a), _poly_trim(b)
    while not (len(b) == 1 and _is_zero(b[0])):
        a, b = b, _poly_mod(a, b)
    return len(_poly_trim(a)) - 1


def poly_derivative(p):
    return [c * i for i, c in enumerate(p)][1:] or [p[0] * 0]


def is_squarefree(poly) -> bool:
    """Squarefree over the coefficient field (componentwise in the split case)."""
    sample = poly[-1]
    if isinstance(sample, ExtElement) and sample.split:
        return all(is_squarefree([getattr(c, side) for c in poly]) for side in ("a", "b"))
    if isinstance(sample, ExtElement) and all(c.in_base() for c in poly):
        poly = [c.a for c in poly]
    if len(poly) <= 2:
        return True
    return _poly_degree_gcd(poly, poly_derivative(poly)) == 0


# ---------------------------------------------------------------------------
# operations on GL_n(E)


def conj_transpose(g: Mat) -> Mat:
    return g.star()


def norm_map(gamma: Mat) -> Mat:
    """Nm(gamma) = conj(gamma) * gamma."""
    if not gamma.is_invertible():
        raise ValueError("norm map needs an invertible matrix")
    return gamma.conj() * gamma


def sigma_conjugate(gamma: Mat, g: Mat) -> Mat:
    """The right action gamma.g = g^-1 gamma conj(g)."""
    if not g.is_invertible():
        raise ValueError("sigma-conjugation by a singular matrix")
    return g.inverse() * gamma * g.conj()


def is_normal_gl(gamma: Mat) -> bool:
    return norm_map(gamma).is_base()


@dataclass(frozen=True)
class SkewHermForm:
    beta: Mat

    def __post_init__(self):
        if self.beta.star() != -self.beta:
            raise ValueError("beta is not skew-Hermitian")
        if not self.beta.is_invertible():
            raise ValueError("beta is singular")

    @property
    def n(self) -> int:
        return self.beta.n

    def is_scalar_j(self, field: LocalField) -> bool:
        return self.beta == Mat.identity(self.n, field.one()) * field.j

    def twist(self, g: Mat) -> Mat:
        """beta^-1 g* beta."""
        return self.beta.inverse() * g.star() * self.beta

    def to_json(self) -> dict:
        return mat_to_json(self.beta)


def split_form(field: LocalField, n: int) -> SkewHermForm:
    """beta+ = j * identity."""
    return SkewHermForm(Mat.identity(n, field.one()) * field.j)


def nonsplit_form(field: LocalField, n: int) -> SkewHermForm:
    """beta- = j * diag(1, ..., 1, p); inert places only."""
    if field.split:
        raise ValueError("all Hermitian spaces are split at split places")
    vals = [field.j] * (n - 1) + [field.j * field.p]
    return SkewHermForm(Mat.diag(vals))


def is_normal_u(zeta: Mat, beta: SkewHermForm) -> bool:
    d = beta.twist(zeta) * zeta
    return zeta * d == d * zeta


def is_unitary(h: Mat, beta: SkewHermForm) -> bool:
    return h.star() * beta.beta * h == beta.beta


def is_rss_matrix(xi: Mat) -> bool:
    return is_squarefree(xi.charpoly())


def vec(m: Mat) -> list:
    return list(m.entries())


def express_in_norm_powers(gamma: Mat, delta: Mat | None = None):
    """Coefficients c_0..c_{n-1} with gamma = sum c_i delta^i, delta = Nm(gamma).

    Raises ValueError when the preconditions (normal, rss norm) fail and
    returns None when gamma is not a polynomial in delta.
    """
    if delta is None:
        if not is_normal_gl(gamma):
            raise ValueError("gamma is not normal")
        delta = norm_map(gamma)
    if not is_rss_matrix(delta):
        raise ValueError("the norm of gamma is not regular semisimple")
    n = gamma.n
    powers = [delta**i for i in range(n)]
    cols = [vec(pw) for pw in powers]
    a = Mat([[cols[i][r] for i in range(n)] for r in range(n * n)])
    return solve_linear(None, a, vec(gamma))


def poly_eval(coeffs, m: Mat) -> Mat:
    out = m * (m._zero())
    pw = m.identity_like()
    for c in coeffs:
        out = out + pw * c
        pw = pw * m
    return out


def mat_to_json(m: Mat) -> dict:
    def enc(x):
        return x.to_json() if isinstance(x, ExtElement) else str(x)

    return {"n": m.shape[0], "cols": m.shape[1], "entries": [[enc(x) for x in r] for r in m.rows]}


def mat_from_json(field: LocalField, obj) -> Mat:
    return Mat([[field.ext_from_json(x) for x in r] for r in obj["entries"]])
