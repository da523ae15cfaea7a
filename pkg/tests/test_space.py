import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from zerodim.space import (Atom, Cylinder, FiniteModel, Interval, ScaledCantor, as_scalar, atom_metric,
                           cylinder_model, format_scalar, grid_below, interval_model, point_distance,
                           random_interval_model, sample_point, threshold_grid, threshold_values,
                           validate_partition)
from zerodim.systems import build_paper_example, embed_binary_odometer


def cyl(word):
    return Atom(0, Cylinder(tuple(int(c) for c in word)))


def test_cylinder_metric_first_difference():
    assert atom_metric(cyl("00"), Atom(1, Cylinder((0, 1)))) == (F(1, 4), F(1, 4))


def test_cylinder_with_itself():
    a = cyl("0")
    assert atom_metric(a, a) == (0, F(1, 4))


def test_interval_pair():
    a = Atom(0, Interval(0, F(1, 3)))
    b = Atom(1, Interval(F(2, 3), 1))
    assert atom_metric(a, b) == (F(1, 3), 1)


def test_scaled_cantor_diameter_and_hull():
    g = ScaledCantor(F(1, 2), F(1, 24))
    assert g.diameter() == F(1, 24)
    assert g.hull() == (F(1, 2), F(13, 24))


def test_level2_cylinders_valid():
    assert validate_partition(cylinder_model(2)).valid


def test_overlapping_intervals_flagged():
    m = interval_model([Interval(0, F(1, 2)), Interval(F(1, 3), 1)])
    rep = validate_partition(m)
    assert any(v.startswith("disjointness") for v in rep.violations)


def test_injected_bound_order_flagged():
    m = cylinder_model(1)
    dmin = [[0, 1], [1, 0]]
    dmax = [[F(1, 4), F(1, 2)], [F(1, 2), F(1, 4)]]
    rep = validate_partition(m.with_tables(dmin, dmax))
    assert any(v.startswith("bound order") for v in rep.violations)


def test_level1_grid():
    values = threshold_values(cylinder_model(1))
    assert values == [0, F(1, 4), F(1, 2)]
    assert set(values) <= set(threshold_grid(cylinder_model(1)))


def test_single_atom_grid_contains_zero_and_diameter():
    m = interval_model([Interval(0, F(1, 3))])
    assert threshold_values(m) == [0, F(1, 3)]
    assert threshold_grid(m) == [0, F(1, 6), F(1, 3)]


def test_example_level2_grid_contains_min_gap():
    m = build_paper_example(2).finest.model
    assert m.min_gap in threshold_grid(m)


def test_example_level4_constants():
    # frozen from an independent recomputation of the endpoint arithmetic
    m = build_paper_example(4).finest.model
    assert m.n == 58
    assert m.mesh == F(1, 72)
    assert m.min_gap == F(1, 648)
    grid = threshold_grid(m)
    assert len(grid) == 1127
    assert min(v for v in grid if v > 0) == F(1, 1296)
    assert validate_partition(m).valid


def test_grid_below():
    assert grid_below([0, F(1, 4), F(1, 2)], F(1, 2)) == F(1, 4)
    assert grid_below([0, F(1, 4)], 0) is None


def test_scalars_refuse_floats():
    with pytest.raises(TypeError):
        as_scalar(0.5)
    with pytest.raises(ValueError):
        as_scalar("0.5")
    assert as_scalar("3/6") == F(1, 2)


@given(st.fractions())
def test_scalar_roundtrip(x):
    s = format_scalar(x)
    y = as_scalar(s)
    assert y == x and y.denominator > 0


@given(st.integers(-10 ** 30, 10 ** 30), st.integers(1, 10 ** 30))
def test_scalar_lowest_terms(p, q):
    x = as_scalar(f"{p * 7}/{q * 7}")
    num, den = format_scalar(x).split("/")
    assert int(den) > 0 and F(int(num), int(den)) == F(p, q)


def _models():
    yield cylinder_model(3)
    yield cylinder_model(2, (3, 2))
    yield build_paper_example(2).finest.model
    yield embed_binary_odometer(3).finest.model
    rng = random.Random(7)
    for n in (1, 2, 5):
        yield random_interval_model(rng, n)


@pytest.mark.parametrize("model", list(_models()), ids=lambda m: f"{m.metric_kind}-{m.n}")
def test_sampled_points_respect_bounds(model):
    rng = random.Random(0)
    samples = 1000 if model.n <= 8 else 100
    for i in range(model.n):
        for j in range(model.n):
            lo, hi = model.dmin(i, j), model.dmax(i, j)
            gi, gj = model.atoms[i].geometry, model.atoms[j].geometry
            for _ in range(samples // max(1, model.n)):
                x = sample_point(gi, rng, radices=model.radices)
                y = sample_point(gj, rng, radices=model.radices)
                d = point_distance(x, y)
                assert lo <= d <= hi, (i, j, x, y)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.randoms(use_true_random=False))
def test_grid_stable_under_relabelling(n, rnd):
    m = random_interval_model(random.Random(rnd.randint(0, 10 ** 6)), n)
    geoms = [a.geometry for a in m.atoms]
    rnd.shuffle(geoms)
    assert threshold_grid(interval_model(geoms)) == threshold_grid(m)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(0, 10 ** 6))
def test_random_models_valid(n, seed):
    m = random_interval_model(random.Random(seed), n)
    assert validate_partition(m).valid
    if n > 1:
        assert m.mesh < m.min_gap


def test_model_json_roundtrip():
    for m in _models():
        back = FiniteModel.from_json(m.to_json())
        assert back.dmin_table() == m.dmin_table() and back.dmax_table() == m.dmax_table()
