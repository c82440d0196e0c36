import random
from fractions import Fraction

import pytest

from oracles import gl_n1_coset_sum

from tggp.cyclotomic import CycValue
from tggp.harness import compare_split, gen_matched_pair, gen_split_case, split_delta_cases
from tggp.localfield import LaurentValue, LocalField
from tggp.matalg import Mat, split_form
from tggp.orbint import (
    BudgetExceeded,
    orb_gl_general,
    orb_gl_unramified,
    orb_u_general,
    orb_u_unramified,
    split_transfer_pair,
)
from tggp.orbitspace import GLOrbitRep, UOrbitRep

F = Fraction
FIELD = LocalField(3)
SPLIT = LocalField(3, split=True, mu_exp=1)
E = FIELD.E


def gl_rep(gamma, x, t):
    return GLOrbitRep(Mat([[gamma]]), Mat([[FIELD.embed(x)]]), Mat([[FIELD.from_imaginary_coord(t)]]))


def u_rep(zeta, z):
    return UOrbitRep(Mat([[zeta]]), Mat([[z]]), split_form(FIELD, 1))


def test_rank_one_gl_examples():
    j2 = (FIELD.j * FIELD.j).base_value()
    # y = j makes jy = j^2 a unit; only L = O contributes
    assert orb_gl_unramified(FIELD, gl_rep(E(1), 1, 1), 0).at_one() == CycValue.one()
    # y = p j: L = O and L = p O cancel
    assert orb_gl_unramified(FIELD, gl_rep(E(1), 1, 3), 0).at_one().is_zero()
    # x = p^-1, y = p j: L = pO, O, p^-1 O ... restricted by both conditions
    res = orb_gl_unramified(FIELD, gl_rep(E(1), F(1, 3), 3), 0)
    assert res.at_one() == gl_n1_coset_sum(3, F(1), F(1, 3), 3 * j2)
    assert res.complete


def test_rank_one_gl_formal_variable():
    # the exponent of t records val det g: here a in {1, 2, 3}
    res = orb_gl_unramified(FIELD, gl_rep(E(1), F(1, 3), 27), 0, s_formal=True)
    assert res.value == LaurentValue({1: -1, 2: 1, 3: -1})
    assert res.at_one() == CycValue.from_rational(-1)


def test_rank_one_unitary_examples():
    assert orb_u_unramified(FIELD, u_rep(E(1, 1), E(1)), 0).at_one() == CycValue.one()
    assert orb_u_unramified(FIELD, u_rep(E(1, 1), E(0, 3)), 0).at_one() == CycValue.one()
    assert orb_u_unramified(FIELD, u_rep(E(1, 1), E(F(1, 3))), 0).at_one().is_zero()
    # det zeta* zeta not a unit
    assert orb_u_unramified(FIELD, u_rep(E(3), E(1)), 0).at_one().is_zero()


def test_engine_preconditions():
    with pytest.raises(ValueError):
        orb_gl_unramified(SPLIT, gl_rep(E(1), 1, 1), 0)
    non_kottwitz = Mat([[E(1), E(0)], [E(0), E(0, 1)]])
    r = UOrbitRep(non_kottwitz, Mat([[E(1), E(1)]]), split_form(FIELD, 2))
    with pytest.raises(ValueError):
        orb_u_unramified(FIELD, r, 0)
    with pytest.raises(ValueError):
        orb_gl_unramified(FIELD, gl_rep(E(1), 1, 1), F(1, 3))


def test_rank_two_results_are_complete_and_certified():
    for seed in range(3):
        inst = gen_matched_pair(FIELD, 2, seed)
        gl = orb_gl_unramified(FIELD, inst.gl, inst.d)
        u = orb_u_unramified(FIELD, inst.u, inst.d)
        assert gl.complete and u.complete
        # a negative index gap means the lattice sandwich is empty
        if gl.bound_used < 0:
            assert gl.enumerated == 0 and gl.value.is_zero()
        assert set(gl.to_json()) == {"value", "value_at_s_half", "enumerated", "bound_used", "complete"}


def test_budget_exhaustion_is_reported():
    for seed in range(10):
        inst = gen_matched_pair(FIELD, 2, seed)
        full = orb_u_unramified(FIELD, inst.u, inst.d)
        if full.enumerated > 2:
            cut = orb_u_unramified(FIELD, inst.u, inst.d, budget=1)
            assert not cut.complete
            return
    pytest.fail("no instance with more than two enumerated lattices")


def test_split_engines_agree_and_do_not_depend_on_widening():
    for seed in range(6):
        case = gen_split_case(SPLIT, seed)
        ftil, phip = split_transfer_pair(SPLIT, case.f1, case.f2, case.phi1, case.phi2)
        base = orb_gl_general(SPLIT, case.gl, ftil, phip)
        wide = orb_gl_general(SPLIT, case.gl, ftil, phip, widen=2)
        u = orb_u_general(SPLIT, case.u, (case.f1, case.f2), (case.phi1, case.phi2), widen=2)
        assert base.at_one() == wide.at_one() == u.at_one()


def test_split_negative_control():
    """Moving y0 on the unitary side only breaks the equality."""
    differ = 0
    for seed in range(20):
        case = gen_split_case(SPLIT, seed)
        gl, u = compare_split(case)
        if gl.at_one().is_zero():
            continue
        z = case.u.z
        moved = UOrbitRep(case.u.zeta, Mat([[SPLIT.E(e.a, e.b * 3) for e in z.rows[0]]]), case.u.beta)
        other = orb_u_general(SPLIT, moved, (case.f1, case.f2), (case.phi1, case.phi2))
        differ += other.at_one() != gl.at_one()
    assert differ > 0


def test_split_delta_cases_are_nonzero():
    for case in split_delta_cases(SPLIT):
        gl, u = compare_split(case)
        assert gl.at_one() == u.at_one()
        assert not gl.at_one().is_zero()


def test_split_budget():
    case = gen_split_case(SPLIT, 0)
    with pytest.raises(BudgetExceeded):
        compare_split(case, budget=1)


def test_split_transfer_pair_constant():
    case = gen_split_case(SPLIT, 1)
    ftil, phip = split_transfer_pair(SPLIT, case.f1, case.f2, case.phi1, case.phi2)
    g = Mat([[SPLIT.E(1, 1)]])
    assert ftil(g) == case.f1(Mat([[F(1)]])) * case.f2(Mat([[F(1)]])) * (1 / SPLIT.zeta_E1())
    with pytest.raises(ValueError):
        split_transfer_pair(FIELD, case.f1, case.f2, case.phi1, case.phi2)


def test_general_engine_limits():
    inst = gen_matched_pair(FIELD, 2, 0)
    from tggp.schwartz import GroupFn, LatticeFn

    with pytest.raises(NotImplementedError):
        orb_gl_general(FIELD, inst.gl, GroupFn.unramified(FIELD, 2, over="E"), LatticeFn.basic(FIELD, "E", 2))


def test_inert_general_engines_on_random_rank_one_data():
    from tggp.localfield import vol_u
    from tggp.schwartz import GroupFn, LatticeFn

    rng = random.Random(3)
    ftil = GroupFn.unramified(FIELD, 1, over="E")
    f = ftil.scale(1 / vol_u(1, 3) ** 2)
    basic_e, basic_f = LatticeFn.basic(FIELD, "E", 1), LatticeFn.basic(FIELD, "F", 1)
    for _ in range(20):
        gamma = E(rng.choice([1, 2, 4]), rng.randint(0, 3))
        r = gl_rep(gamma, F(rng.choice([1, 2])) * F(3) ** rng.randint(-2, 1), F(3) ** rng.randint(-1, 2))
        assert orb_gl_general(FIELD, r, ftil, basic_e, s_formal=True).value == orb_gl_unramified(FIELD, r, 0, s_formal=True).value
        u = u_rep(gamma, E(rng.randint(1, 4), rng.randint(0, 2)) * F(3) ** rng.randint(-1, 1))
        assert orb_u_general(FIELD, u, f, (basic_f, basic_f)).at_one() == orb_u_unramified(FIELD, u, 0).at_one()
