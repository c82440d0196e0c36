from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tggp.localfield import LocalField
from tggp.matalg import (
    Mat,
    SkewHermForm,
    express_in_norm_powers,
    is_normal_gl,
    is_normal_u,
    is_rss_matrix,
    is_squarefree,
    is_unitary,
    mat_from_json,
    mat_to_json,
    nonsplit_form,
    norm_map,
    poly_eval,
    rank,
    solve_linear,
    split_form,
)

FIELD = LocalField(3)
SPLIT = LocalField(3, split=True)

small = st.integers(-4, 4)


def fmats(n):
    return st.lists(st.lists(small.map(Fraction), min_size=n, max_size=n), min_size=n, max_size=n).map(Mat)


def emats(field, n):
    entry = st.tuples(small, small).map(lambda ab: field.E(*ab))
    return st.lists(st.lists(entry, min_size=n, max_size=n), min_size=n, max_size=n).map(Mat)


@given(fmats(3), fmats(3))
@settings(max_examples=50, deadline=None)
def test_determinant_is_multiplicative(a, b):
    assert (a * b).det() == a.det() * b.det()
    assert a.T.det() == a.det()


@given(emats(FIELD, 2))
@settings(max_examples=50, deadline=None)
def test_inverse_over_e(a):
    if a.is_invertible():
        one = Mat.identity(2, FIELD.one())
        assert a * a.inverse() == one and a.inverse() * a == one
    else:
        assert a.det().is_zero()


@given(emats(SPLIT, 2))
@settings(max_examples=30, deadline=None)
def test_split_inverse_needs_both_components(a):
    d = a.det()
    assert a.is_invertible() == (d.a != 0 and d.b != 0)


@given(fmats(3))
@settings(max_examples=40, deadline=None)
def test_cayley_hamilton(a):
    c = a.charpoly()
    assert poly_eval(c, a) == a * Fraction(0)
    assert c[-1] == 1 and c[0] == (-1) ** 3 * a.det()


@given(fmats(2), st.lists(small.map(Fraction), min_size=2, max_size=2))
@settings(max_examples=40, deadline=None)
def test_solve_linear(a, b):
    sol = solve_linear(None, a, b)
    if a.is_invertible():
        assert [sum(a[i, j] * sol[j] for j in range(2)) for i in range(2)] == b
    elif sol is not None:
        assert [sum(a[i, j] * sol[j] for j in range(2)) for i in range(2)] == b


def test_rank_and_squarefree():
    F = Fraction
    assert rank(Mat([[F(1), F(2)], [F(2), F(4)]])) == 1
    assert is_squarefree([F(-2), F(0), F(1)])
    assert not is_squarefree([F(1), F(-2), F(1)])
    assert is_rss_matrix(Mat([[F(0), F(1)], [F(1), F(1)]]))
    assert not is_rss_matrix(Mat.identity(2))


def test_norm_map_and_normality():
    E = FIELD.E
    g = Mat([[E(1, 1), E(0)], [E(0), E(2, -1)]])
    assert is_normal_gl(g)
    d = norm_map(g)
    assert d == g.conj() * g and d.is_base()
    coeffs = express_in_norm_powers(g, d)
    assert poly_eval(coeffs, d) == g
    h = Mat([[E(1), E(0, 1)], [E(1), E(1)]])
    assert not is_normal_gl(h)


def test_skew_hermitian_forms():
    bp = split_form(FIELD, 2)
    bm = nonsplit_form(FIELD, 2)
    assert bp.is_scalar_j(FIELD) and not bm.is_scalar_j(FIELD)
    with pytest.raises(ValueError):
        SkewHermForm(Mat.identity(2, FIELD.one()))
    with pytest.raises(ValueError):
        nonsplit_form(SPLIT, 2)
    E = FIELD.E
    # a diagonal unitary matrix for beta+
    u = Mat([[E(1), E(0)], [E(0), E(-1)]])
    assert is_unitary(u, bp)
    zeta = Mat([[E(1, 1), E(0)], [E(0), E(2)]])
    assert is_normal_u(zeta, bp)
    assert bp.twist(zeta) == bp.beta.inverse() * zeta.star() * bp.beta


@given(emats(FIELD, 2))
@settings(max_examples=30, deadline=None)
def test_json_round_trip(a):
    assert mat_from_json(FIELD, mat_to_json(a)) == a
