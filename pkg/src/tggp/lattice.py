"""Lattices over O_F or O_E (inert) given by rational generators.

A lattice is stored by an echelon basis: a list of n vectors (tuples)
where vector i has its first nonzero coordinate at position i and that
coordinate is p**e_i.  Vectors may be rows or columns; the module does
not care.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from .localfield import ExtElement, LocalField


class Ring:
    """The valuation ring O of F (``ext=False``) or of the inert E."""

    def __init__(self, field: LocalField, ext: bool):
        if ext and field.split:
            raise ValueError("lattices over the split algebra are pairs of F-lattices")
        self.field = field
        self.ext = ext
        self.p = field.p

    def val(self, x):
        return self.field.val(x)

    def zero(self):
        return self.field.zero() if self.ext else Fraction(0)

    def one(self):
        return self.field.one() if self.ext else Fraction(1)

    def is_zero(self, x) -> bool:
        return x.is_zero() if isinstance(x, ExtElement) else x == 0

    def coerce(self, x):
        if self.ext and not isinstance(x, ExtElement):
            return self.field.embed(x)
        return x

    def residues(self, k: int):
        """Representatives of O / p^k O."""
        m = self.p**k
        if not self.ext:
            return [Fraction(a) for a in range(m)]
        return [self.field.E(a, b) for a in range(m) for b in range(m)]

    def residue_key(self, x, k: int):
        from .localfield import residue

        m = self.p**k
        if isinstance(x, ExtElement):
            return (residue(x.a, m, self.p), residue(x.b, m, self.p))
        return residue(x, m, self.p)

    def units_mod(self, k: int):
        return [u for u in self.residues(k) if self.val(u) == 0]


def echelon(ring: Ring, vectors, dim: int | None = None):
    """Echelon basis of the O-span of ``vectors``; raises if not full rank."""
    rows = [[ring.coerce(x) for x in v] for v in vectors]
    if dim is None:
        dim = len(rows[0])
    basis = []
    work = rows
    for c in range(dim):
        best = None
        for i, r in enumerate(work):
            if not ring.is_zero(r[c]):
                v = ring.val(r[c])
                if best is None or v < best[0]:
                    best = (v, i)
        if best is None:
            raise ValueError("generators do not span a full-rank lattice")
        e, i = best
        piv = work.pop(i)
        unit = piv[c] / (ring.one() * Fraction(ring.p) ** e)
        piv = [x / unit for x in piv]
        new = []
        for r in work:
            if not ring.is_zero(r[c]):
                f = r[c] / piv[c]
                r = [a - f * b for a, b in zip(r, piv)]
            if any(not ring.is_zero(x) for x in r):
                new.append(r)
        work = new
        basis.append(tuple(piv))
    return basis


def pivots(basis) -> list:
    return [v[i] for i, v in enumerate(basis)]


def coords(ring: Ring, basis, v):
    """Coordinates c with v = sum c_i basis_i (basis in echelon form)."""
    v = [ring.coerce(x) for x in v]
    n = len(basis)
    c = [None] * n
    for i in range(n):
        ci = v[i] / basis[i][i]
        c[i] = ci
        if not ring.is_zero(ci):
            v = [a - ci * b for a, b in zip(v, basis[i])]
    if any(not ring.is_zero(x) for x in v):
        raise ValueError("vector outside the span")
    return c


def contains(ring: Ring, basis, v) -> bool:
    return all(ring.val(c) >= 0 for c in coords(ring, basis, v) if not ring.is_zero(c))


def contains_lattice(ring: Ring, big, small) -> bool:
    return all(contains(ring, big, v) for v in small)


def index_valuation(ring: Ring, basis) -> int:
    """val det of the basis; the log_q-index relative to the standard lattice."""
    return sum(ring.val(x) for x in pivots(basis))


def lattice_sum(ring: Ring, a, b):
    return echelon(ring, list(a) + list(b))


def standard(ring: Ring, n: int, shift: int = 0):
    one = ring.one()
    z = ring.zero()
    return [tuple(one * Fraction(ring.p) ** shift if i == j else z for j in range(n)) for i in range(n)]


def scale(ring: Ring, basis, k: int):
    f = Fraction(ring.p) ** k
    return [tuple(x * f for x in v) for v in basis]


def _as_matrix_cols(basis):
    from .matalg import Mat

    # columns are the basis vectors
    return Mat([[basis[j][i] for j in range(len(basis))] for i in range(len(basis))])


def dual(ring: Ring, basis, gram=None):
    """Dual lattice {v : <u, v> in O for u in L} for the pairing u^T G v
    (G = identity when ``gram`` is None).  For Hermitian duality pass the
    conjugated generators."""
    from .matalg import Mat

    bmat = Mat([list(v) for v in basis])  # rows are basis vectors
    if gram is not None:
        bmat = bmat * gram
    inv = bmat.inverse()
    cols = [tuple(inv.rows[i][j] for i in range(len(basis))) for j in range(len(basis))]
    return echelon(ring, cols)


def intersect(ring: Ring, a, b):
    return dual(ring, lattice_sum(ring, dual(ring, a), dual(ring, b)))


def _hnf_sublattices(ring: Ring, n: int, N: int, total: int | None = None):
    """All lattices L with p^N O^n <= L <= O^n, as echelon bases (rows).

    ``total`` optionally caps the index valuation of L."""
    p = Fraction(ring.p)
    one = ring.one()
    z = ring.zero()
    for exps in itertools.product(range(N + 1), repeat=n):
        if total is not None and sum(exps) > total:
            continue
        # row i = (0.., p^e_i, h_{i,i+1}, ...) with h_{ij} mod p^{e_j}
        slots = [(i, j) for i in range(n) for j in range(i + 1, n)]
        choices = [ring.residues(exps[j]) for (i, j) in slots]
        for hs in itertools.product(*choices):
            rows = [[z] * n for _ in range(n)]
            for i in range(n):
                rows[i][i] = one * p ** exps[i]
            for (i, j), h in zip(slots, hs):
                rows[i][j] = h
            basis = [tuple(r) for r in rows]
            if all(contains(ring, basis, v) for v in standard(ring, n, N)):
                yield basis


def _exponent(ring: Ring, basis) -> int:
    """Least N with p^N O^n <= span(basis)."""
    from .matalg import Mat

    inv = Mat([list(v) for v in basis]).inverse()
    vals = [ring.val(e) for e in inv.entries() if not ring.is_zero(e)]
    return max(0, -min(vals))


def sublattices_between(ring: Ring, small, big):
    """Every O-lattice L with small <= L <= big (both full rank)."""
    n = len(big)
    if not contains_lattice(ring, big, small):
        raise ValueError("small lattice is not contained in the big one")
    small_c = [coords(ring, big, v) for v in small]
    small_c = echelon(ring, small_c)
    total = index_valuation(ring, small_c)
    N = _exponent(ring, small_c)
    for sub in _hnf_sublattices(ring, n, N, total):
        if contains_lattice(ring, sub, small_c):
            yield [
                tuple(sum((c * big[k][i] for k, c in enumerate(v)), ring.zero()) for i in range(n))
                for v in sub
            ]


def count_sublattices_between(ring: Ring, small, big) -> int:
    return sum(1 for _ in sublattices_between(ring, small, big))


def coset_reps(ring: Ring, big, small):
    """Representatives of big / small (small <= big)."""
    n = len(big)
    small_c = echelon(ring, [coords(ring, big, v) for v in small])
    # small_c is triangular in big-coordinates; a complete set of
    # representatives of O^n / small_c is sum a_i e_i, a_i mod pivot_i
    ranges = [ring.residues(ring.val(small_c[i][i])) for i in range(n)]
    for a in itertools.product(*ranges):
        yield tuple(sum((a[k] * big[k][i] for k in range(n)), ring.zero()) for i in range(n))


def reduce_mod(ring: Ring, x, e: int):
    """Canonical representative of x modulo p^e O."""
    from .localfield import residue

    p = ring.p
    if isinstance(x, ExtElement):
        parts = (x.a, x.b)
    else:
        parts = (x,)
    out = []
    for c in parts:
        if c == 0:
            out.append(Fraction(0))
            continue
        v = ring.field.val(c)
        N = max(0, -v)
        mod = p ** (N + e) if N + e > 0 else 1
        if N + e <= 0:
            out.append(Fraction(0))
            continue
        r = residue(c * p**N, mod, p)
        out.append(Fraction(r, p**N))
    if isinstance(x, ExtElement):
        return ExtElement(out[0], out[1], x.eps, x.split)
    return out[0]


def hnf(ring: Ring, vectors):
    """Canonical basis of the O-span: echelon form with the entries at
    pivot positions of the other vectors reduced modulo the pivot."""
    basis = [list(v) for v in echelon(ring, vectors)]
    n = len(basis)
    for i in range(n):
        e = ring.val(basis[i][i])
        for j in range(i):
            x = basis[j][i]
            if ring.is_zero(x):
                continue
            r = reduce_mod(ring, x, e)
            f = (x - r) / basis[i][i]
            if not ring.is_zero(f):
                basis[j] = [a - f * b for a, b in zip(basis[j], basis[i])]
    return [tuple(v) for v in basis]
