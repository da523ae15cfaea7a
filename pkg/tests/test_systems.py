import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from zerodim.space import Cylinder, ScaledCantor, cylinder_model, random_interval_model
from zerodim.systems import (ConstructionError, PreconditionError, SwapInvolution, SystemFamily, SystemLevel,
                             binary_to_odometer, build_identity, build_odometer, build_paper_example,
                             embed_binary_odometer, extend_family, gap_piece, j_interval,
                             odometer_to_binary, paper_example_atoms, perturb, refinement_violations,
                             swap_homeomorphism, swap_permutation, system_distance, system_power,
                             transposition)
from oracles import swap_brute_check


def test_odometer_level2_cycle():
    fam = build_odometer([2, 4, 8], 2)
    assert fam.level(2).pi == (1, 2, 3, 0)


def test_odometer_parent_is_residue():
    fam = build_odometer([2, 4], 2)
    assert fam.parents[0][3] == 1


def test_odometer_three_cycle():
    assert build_odometer([3, 6], 1).level(1).cycles() == [[0, 1, 2]]


def test_odometer_bad_chain_names_index():
    with pytest.raises(ConstructionError, match="index 3"):
        build_odometer([2, 4, 6], 3)
    with pytest.raises(ConstructionError):
        build_odometer([1, 2], 2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=1, max_size=5))
def test_odometer_single_cycle_and_commutation(ratios):
    m, acc = [], 1
    for r in ratios:
        acc *= r
        m.append(acc)
    fam = build_odometer(m, len(m))
    for k in range(1, fam.depth + 1):
        assert fam.level(k).cycle_lengths() == (m[k - 1],) * m[k - 1]
    assert refinement_violations(fam) == []


def test_binary_embedding_of_all_ones():
    # (1, 1, 1, ...) in X_m reads 1, 0, 0, ... in binary
    assert odometer_to_binary((1, 1, 1, 1)) == (1, 0, 0, 0)
    assert binary_to_odometer((1, 0, 0, 0)) == (1, 1, 1, 1)


def test_j_interval_level2():
    J = j_interval(2, 2)
    assert (J.lo, J.hi) == (F(2, 9), F(1, 3))


def test_embedded_odometer_advances_intervals():
    fam = embed_binary_odometer(3)
    lev = fam.finest
    for l in range(8):
        g = lev.model.atoms[lev.pi[l]].geometry
        assert (g.lo, g.hi) == (j_interval(3, (l + 1) % 8).lo, j_interval(3, (l + 1) % 8).hi)
    assert refinement_violations(fam) == []


def test_first_gap_piece():
    g = gap_piece(j_interval(1, 0), 0)
    assert g == ScaledCantor(F(5, 36), F(1, 72))


def test_example_family_structure():
    K = 4
    fam = build_paper_example(K)
    f = fam.finest
    labels = paper_example_atoms(K)
    assert len(labels) == f.n == 58
    lengths = f.cycle_lengths()
    for i, (kind, j, _) in enumerate(labels):
        if kind == "D":
            assert lengths[i] == 3 * 2 ** j
            assert i in f.rigid
        else:
            assert lengths[i] == 2 ** K
    assert refinement_violations(fam) == []


def test_gamma_pieces_avoid_next_level_intervals():
    K = 4
    for j in range(1, K):
        nxt = [j_interval(j + 1, l) for l in range(2 ** (j + 1))]
        for base in range(2 ** j):
            for c in range(3):
                lo, hi = gap_piece(j_interval(j, base), c).hull()
                assert all(hi < J.lo or J.hi < lo for J in nxt)


def test_example_family_needs_level_two():
    with pytest.raises(ConstructionError):
        build_paper_example(1)


def test_identity_properties():
    m = random_interval_model(random.Random(1), 5)
    ident = build_identity(m)
    assert ident.pi == tuple(range(5))
    assert system_power(ident, 3).pi == ident.pi
    d = system_distance(ident, ident)
    assert d.D == (0, m.mesh)


def test_odometer_cubed():
    fam = system_power(build_odometer([2, 4], 2), 3)
    assert fam.level(2).pi == (3, 0, 1, 2)
    assert refinement_violations(fam) == []


def test_example_cube_gamma_cycles():
    cube = system_power(build_paper_example(4), 3).finest
    labels = paper_example_atoms(4)
    for i, (kind, j, _) in enumerate(labels):
        if kind == "D":
            assert cube.cycle_lengths()[i] == 2 ** j
            assert cube.min_periods[i] == frozenset({2 ** j})


def test_power_one_is_same():
    f = build_paper_example(3).finest
    assert system_power(f, 1) == f


def test_inverse_power():
    f = build_odometer([2, 4, 8], 3).finest
    assert system_power(f, -1).pi == f.pi_inverse


def test_extend_family_keeps_prefix():
    fam = build_odometer([2, 4], 2)
    deeper = extend_family(fam, 4)
    assert deeper.depth == 4 and deeper.level(2).pi == fam.level(2).pi


def test_family_json_roundtrip():
    fam = build_paper_example(3)
    back = SystemFamily.from_json(fam.to_json())
    assert back.finest.pi == fam.finest.pi
    assert back.finest.min_periods == fam.finest.min_periods
    assert back.parents == fam.parents


def test_refinement_violation_detected():
    fam = build_odometer([2, 4], 2)
    bad = SystemFamily(fam.levels, ((0, 0, 1, 1),), None)
    assert refinement_violations(bad)


# swaps


def w(s):
    return tuple(int(c) for c in s)


def test_swap_equal_tuples_is_identity():
    phi = swap_homeomorphism([w("0101")], [w("0101")], F(1, 4))
    assert phi.stages == () and phi.distance_to_identity() == 0


def test_swap_single_pair():
    phi = swap_homeomorphism([w("000")], [w("100")], F(3, 4))
    assert phi.apply(w("000")) == w("100") and phi.apply(w("100")) == w("000")
    assert phi.is_involution()
    assert phi.distance_to_identity() == F(1, 2)


def test_swap_overlapping_pairs_two_stage():
    zeta, eta = [w("0000"), w("0001")], [w("0001"), w("0010")]
    phi = swap_homeomorphism(zeta, eta, F(1, 4))
    assert len(phi.stages) == 2
    assert all(phi.stage_is_involution(i) for i in range(2))
    # brute force over all depth-8 extensions
    for z, e in zip(zeta, eta):
        for tail in range(16):
            t = tuple((tail >> i) & 1 for i in range(4))
            z8 = tuple(list(z) + [0] * (phi.depth - 4)) + t
            assert phi.apply(z8)[:phi.depth] == tuple(list(e) + [0] * (phi.depth - 4))
            assert phi.apply(z8)[phi.depth:] == t
    assert phi.distance_to_identity() < F(1, 4)


def test_swap_rejects_far_tuples():
    with pytest.raises(PreconditionError):
        swap_homeomorphism([w("00")], [w("10")], F(1, 2))


def test_swap_rejects_improper_tuple():
    with pytest.raises(PreconditionError):
        swap_homeomorphism([w("00"), w("00")], [w("01"), w("01")], 1)


def test_swap_json_roundtrip():
    phi = swap_homeomorphism([w("0000"), w("0001")], [w("0001"), w("0010")], F(1, 4))
    assert SwapInvolution.from_json(phi.to_json()) == phi


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 7), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_swap_postconditions(depth, n, seed):
    rng = random.Random(seed)
    n = min(n, 2 ** depth // 2)
    j = rng.randint(1, depth)
    delta = F(1, 2 ** j) + F(1, 2 ** (j + 1))
    prefix_len = j
    words = set()
    zeta = rng.sample(range(2 ** depth), n)
    zeta = [tuple((z >> i) & 1 for i in range(depth)) for z in zeta]
    eta = []
    for z in zeta:
        for _ in range(50):
            cand = z[:prefix_len] + tuple(rng.randint(0, 1) for _ in range(depth - prefix_len))
            if cand not in eta:
                eta.append(cand)
                break
    if len(eta) != len(zeta):
        return
    phi = swap_homeomorphism(zeta, eta, delta)
    pad = lambda u: u + (0,) * (phi.depth - len(u))
    assert swap_brute_check(phi, [pad(z) for z in zeta], [pad(e) for e in eta]) == []
    assert phi.distance_to_identity() < delta
    for i in range(len(phi.stages)):
        assert phi.stage_is_involution(i)


# perturbation and distance


def test_perturb_by_identity_and_twice():
    f = build_odometer([2, 4, 8], 3).finest
    assert perturb(f, tuple(range(8))).pi == f.pi
    phi = transposition(8, [(1, 5)])
    assert perturb(perturb(f, phi), phi).pi == f.pi


def test_odometer_swap_distance_is_pair_distance():
    fam = build_odometer([2, 4, 8], 3)
    f = fam.finest
    phi = swap_homeomorphism([w("010")], [w("011")], F(1, 4))
    g = perturb(f, swap_permutation(phi, f.model))
    d = system_distance(f, g)
    a = f.model.index_of_word(w("010"))
    b = f.model.index_of_word(w("011"))
    assert d.D == (f.model.dmax(a, b), f.model.dmax(a, b))


def test_identity_vs_adjacent_transposition():
    m = cylinder_model(3)
    ident = build_identity(m)
    g = perturb(ident, transposition(8, [(0, 1)]))
    d = system_distance(ident, g)
    assert d.d_c0[0] == m.dmin(0, 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_d_c0_below_D(seed):
    rng = random.Random(seed)
    m = random_interval_model(rng, rng.randint(2, 8))
    n = m.n
    p1, p2 = list(range(n)), list(range(n))
    rng.shuffle(p1)
    rng.shuffle(p2)
    f, g = SystemLevel(m, p1), SystemLevel(m, p2)
    d = system_distance(f, g)
    assert d.d_c0[0] <= d.D[0] and d.d_c0[1] <= d.D[1]
    assert d.d_c0[0] <= d.d_c0[1]


def test_perturbed_periods_unknown():
    f = build_paper_example(2).finest
    g = perturb(f, transposition(f.n, [(0, 1)]))
    with pytest.raises(PreconditionError):
        g.require_periods()


def test_cylinder_geometry_checked():
    assert Cylinder((0, 1)).diameter() == F(1, 8)
