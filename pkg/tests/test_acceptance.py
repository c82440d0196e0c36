"""One test per acceptance criterion; each prints a single pass/fail line."""
import json
import random
import time
from fractions import Fraction

from oracles import gl_n1_coset_sum, u_n1_coset_sum, vol_gl_direct, vol_u_direct

from tggp.cli import cli_main
from tggp.harness import gen_matched_pair
from tggp.localfield import LocalField, vol_gl, vol_u
from tggp.matalg import Mat, split_form
from tggp.orbint import orb_gl_general, orb_gl_unramified, orb_u_general, orb_u_unramified
from tggp.orbitspace import GLOrbitRep, UOrbitRep, gl_to_mtriple, invariants, orbits_match, u_to_mtriple
from tggp.schwartz import GroupFn, LatticeFn


def run_cli(tmp_path, name, *args):
    out = tmp_path / f"{name}.json"
    t0 = time.perf_counter()
    code = cli_main([*args, "--json-out", str(out)])
    return code, json.loads(out.read_text()), time.perf_counter() - t0


def test_fl_rank_one(tmp_path, criterion):
    reports, elapsed = [], 0.0
    for p in (3, 5):
        code, rep, dt = run_cli(tmp_path, f"fl1-{p}", "verify-fl", "--n", "1", "--p", str(p), "--count", "50")
        assert code == 0
        reports.append(rep)
        elapsed += dt
    passed = sum(r["passed"] for r in reports)
    ok = criterion("FL-1", passed == 100 and elapsed < 10, f"{passed}/100 exact equalities, {elapsed:.1f} s")
    assert ok


def test_fl_rank_two(tmp_path, criterion):
    code, rep, dt = run_cli(tmp_path, "fl2", "verify-fl", "--n", "2", "--p", "3", "--count", "10", "--bound", "2")
    ok = criterion(
        "FL-2",
        code == 0 and rep["passed"] == 10 and rep["inconclusive"] == 0 and dt < 600,
        f"{rep['passed']}/10 exact and complete, {rep['nonzero']} nonzero, {dt:.1f} s",
    )
    assert ok


def test_vanishing(tmp_path, criterion):
    c1, r1, _ = run_cli(tmp_path, "van1", "verify-vanishing", "--n", "1", "--count", "25")
    c2, r2, _ = run_cli(tmp_path, "van2", "verify-vanishing", "--n", "2", "--count", "5")
    passed = r1["passed"] + r2["passed"]
    ok = criterion("VAN", c1 == 0 and c2 == 0 and passed == 30, f"{passed}/30 GL-side values exactly 0")
    assert ok


def test_split_transfer(tmp_path, criterion):
    code, rep, dt = run_cli(tmp_path, "split", "verify-split", "--n", "1", "--p", "3", "--count", "20")
    ok = criterion(
        "SPLIT",
        code == 0 and rep["passed"] == 23 and rep["count"] == 23,
        f"{rep['passed']}/23 equalities (20 random n = 1, 3 n = 2 delta cases), {rep['nonzero']} nonzero, {dt:.1f} s",
    )
    assert ok


def test_fourier(tmp_path, criterion):
    code, rep, dt = run_cli(tmp_path, "fourier", "fourier-selftest", "--count", "20")
    # four identities, each checked on 20 random lattice functions
    ok = criterion(
        "FOURIER",
        code == 0 and rep["passed"] == 80 and dt < 30,
        f"{rep['passed']}/80 identity checks, {dt:.1f} s",
    )
    assert ok


def _rand_ext(rng, field, lo=-1, hi=1):
    p = field.p
    while True:
        a, b = rng.randint(-4, 4), rng.randint(-4, 4)
        if a or b:
            return field.E(a, b) * Fraction(p) ** rng.randint(lo, hi)


def _rand_gl_e(rng, field, n):
    while True:
        h = Mat([[_rand_ext(rng, field) for _ in range(n)] for _ in range(n)])
        if h.is_invertible():
            return h


def test_invariants(criterion):
    rng = random.Random(11)
    field = LocalField(3)
    instances = [gen_matched_pair(field, n, s) for n in (1, 2) for s in range(10)]
    stable = 0
    for i in range(100):
        inst = instances[i % len(instances)]
        m = gl_to_mtriple(inst.gl) if i % 2 == 0 else u_to_mtriple(inst.u)
        stable += invariants(m.act(_rand_gl_e(rng, field, m.n))) == invariants(m)
    matched = sum(orbits_match(inst.gl, inst.u) for inst in instances)
    p = Fraction(field.p)
    scaled = sum(orbits_match(inst.gl, UOrbitRep(inst.u.zeta, inst.u.z * p, inst.u.beta)) for inst in instances)
    ok = criterion(
        "INV",
        stable == 100 and matched == len(instances) and scaled == 0,
        f"{stable}/100 perturbations invariant, {matched}/{len(instances)} matched, {scaled} match after z -> p z",
    )
    assert ok


def _oracle_inputs(rng, field):
    # mostly unit zeta, so that the indicator on det zeta* zeta is usually on
    e = rng.choice([0, 0, 0, 0, -1, 1])
    zeta = _rand_ext(rng, field, e, e)
    while field.val(zeta) != e:
        zeta = _rand_ext(rng, field, e, e)
    x = Fraction(rng.choice([1, -1, 2, 4])) * Fraction(field.p) ** rng.randint(-2, 2)
    t = Fraction(rng.choice([1, -1, 2, 5])) * Fraction(field.p) ** rng.randint(-2, 2)
    z = _rand_ext(rng, field, -1, 1)
    return zeta, x, t, z


def test_oracle(criterion):
    rng = random.Random(5)
    field = LocalField(3)
    agree = 0
    for _ in range(100):
        gamma, x, t, z = _oracle_inputs(rng, field)
        y = field.from_imaginary_coord(t)
        r = GLOrbitRep(Mat([[gamma]]), Mat([[field.embed(x)]]), Mat([[y]]))
        jy = (field.j * y).base_value()
        gl = orb_gl_unramified(field, r, 0).at_one()
        u = orb_u_unramified(field, UOrbitRep(Mat([[gamma]]), Mat([[z]]), split_form(field, 1)), 0).at_one()
        agree += gl == gl_n1_coset_sum(field.p, gamma.norm(), x, jy) and u == u_n1_coset_sum(field.p, gamma.norm(), z.norm())

    # the general engines with the unramified test data
    ftil = GroupFn.unramified(field, 1, over="E")
    phi = LatticeFn.basic(field, "E", 1)
    f = GroupFn.unramified(field, 1, over="E").scale(1 / vol_u(1, field.q) ** 2)
    basic = LatticeFn.basic(field, "F", 1)
    cross = 0
    for s in range(30):
        inst = gen_matched_pair(field, 1, s)
        same_gl = orb_gl_general(field, inst.gl, ftil, phi, s_formal=True).value == orb_gl_unramified(field, inst.gl, 0, s_formal=True).value
        same_u = orb_u_general(field, inst.u, f, (basic, basic)).at_one() == orb_u_unramified(field, inst.u, 0).at_one()
        cross += same_gl and same_u
    ok = criterion("ORACLE", agree == 100 and cross == 30, f"{agree}/100 oracle agreements, {cross}/30 cross-engine agreements")
    assert ok


def test_measures(criterion):
    checks = []
    for q, p, k in ((3, 3, 1), (5, 5, 1), (9, 3, 2)):
        for n in (1, 2):
            checks.append(vol_gl(n, q) == vol_gl_direct(q, p, k, n))
        checks.append(vol_u(1, q) == vol_u_direct(q, p, k, 1))
    checks.append(vol_u(2, 3) == vol_u_direct(3, 3, 1, 2))
    ok = criterion("MEASURE", all(checks), f"{sum(checks)}/{len(checks)} volumes equal to finite-field group orders")
    assert ok
