from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import count_submodules

from tggp.lattice import (
    Ring,
    contains,
    contains_lattice,
    coset_reps,
    count_sublattices_between,
    dual,
    echelon,
    hnf,
    index_valuation,
    intersect,
    lattice_sum,
    scale,
    standard,
    sublattices_between,
)
from tggp.localfield import LocalField

FIELD = LocalField(3)
RF = Ring(FIELD, False)
RE = Ring(FIELD, True)

entry = st.builds(lambda a, e: Fraction(a) * Fraction(3) ** e, st.integers(-5, 5), st.integers(-2, 2))


def bases(n=2):
    rows = st.lists(st.tuples(entry, entry), min_size=n, max_size=n)
    return rows.filter(lambda r: r[0][0] * r[1][1] - r[0][1] * r[1][0] != 0)


@pytest.mark.parametrize(
    "ring,k,expected_eps",
    [(RF, 1, None), (RF, 2, None), (RE, 1, FIELD.eps)],
)
def test_sublattice_counts_against_subgroup_oracle(ring, k, expected_eps):
    n = 2
    small = standard(ring, n, k)
    big = standard(ring, n)
    assert count_sublattices_between(ring, small, big) == count_submodules(3, k, n, expected_eps)


def test_sublattice_count_rank_one():
    assert count_sublattices_between(RF, standard(RF, 1, 3), standard(RF, 1, -1)) == 5


def test_sublattices_are_distinct_and_sandwiched():
    small, big = standard(RF, 2, 1), standard(RF, 2, -1)
    seen = set()
    for L in sublattices_between(RF, small, big):
        assert contains_lattice(RF, L, small) and contains_lattice(RF, big, L)
        seen.add(tuple(hnf(RF, L)))
    assert len(seen) == count_sublattices_between(RF, small, big)


def test_sandwich_must_be_ordered():
    with pytest.raises(ValueError):
        list(sublattices_between(RF, standard(RF, 2, -1), standard(RF, 2)))


@given(bases(), bases())
@settings(max_examples=40, deadline=None)
def test_sum_intersection_and_duality(a, b):
    a, b = echelon(RF, a), echelon(RF, b)
    s = lattice_sum(RF, a, b)
    i = intersect(RF, a, b)
    assert contains_lattice(RF, s, a) and contains_lattice(RF, s, b)
    assert contains_lattice(RF, a, i) and contains_lattice(RF, b, i)
    # index additivity: [s : a] = [b : i]
    assert index_valuation(RF, a) - index_valuation(RF, s) == index_valuation(RF, i) - index_valuation(RF, b)
    assert hnf(RF, dual(RF, dual(RF, a))) == hnf(RF, a)
    assert index_valuation(RF, dual(RF, a)) == -index_valuation(RF, a)


@given(bases())
@settings(max_examples=40, deadline=None)
def test_hnf_is_canonical(a):
    b = [a[0], tuple(x + 3 * y for x, y in zip(a[1], a[0]))]
    assert hnf(RF, a) == hnf(RF, b)


def test_coset_representatives():
    big = standard(RF, 2)
    small = echelon(RF, [(Fraction(3), Fraction(1)), (Fraction(0), Fraction(9))])
    reps = list(coset_reps(RF, big, small))
    assert len(reps) == 27
    # pairwise distinct modulo small
    for i, u in enumerate(reps):
        for v in reps[:i]:
            assert not contains(RF, small, [x - y for x, y in zip(u, v)])


def test_extension_lattices():
    L = standard(RE, 2)
    assert index_valuation(RE, scale(RE, L, 1)) == 2
    v = (FIELD.E(1, 1), FIELD.E(0, 3))
    assert contains(RE, L, v)
    assert not contains(RE, L, (FIELD.E(Fraction(1, 3), 0), FIELD.zero()))
