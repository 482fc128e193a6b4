import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirtail import voronoi as vor
from sirtail.exceptions import InvalidParameterError
from sirtail.models import Ginibre, LatticeMix, Poisson
from sirtail.ppsampler import PlanarPalmSample
from sirtail.streams import stream_rng

coords = st.floats(-3.0, 3.0).filter(lambda x: abs(x) > 1e-3)
configs = st.lists(st.tuples(coords, coords), min_size=1, max_size=12, unique=True)


def test_square_cell():
    cell = vor.cell_of_origin(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]), 10.0)
    assert cell.bounded
    assert cell.circumradius == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    assert cell.area == pytest.approx(1.0)
    assert np.allclose(np.sort(np.abs(cell.vertices), axis=0), 0.5)


def test_single_point_is_unbounded():
    cell = vor.cell_of_origin(np.array([[2.0, 0.0]]), 10.0)
    assert not cell.bounded
    assert cell.vertices[:, 0].max() == pytest.approx(1.0)
    assert cell.area == pytest.approx(11.0 * 20.0)


def test_empty_and_invalid_inputs():
    cell = vor.cell_of_origin(np.empty((0, 2)), 2.0)
    assert not cell.bounded and cell.area == pytest.approx(16.0)
    sample = PlanarPalmSample(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]), 2.0, Poisson())
    assert vor.cell_of_origin(sample, 2.0).bounded
    with pytest.raises(InvalidParameterError):
        vor.cell_of_origin(np.array([[0.0, 0.0]]), 1.0)
    with pytest.raises(InvalidParameterError):
        vor.cell_of_origin(np.array([[1.0, 0.0]]), 0.0)


def _grid_disagreement(pts, box, step):
    g = np.arange(-box + step / 2, box, step)
    gx, gy = np.meshgrid(g, g)
    grid = np.column_stack((gx.ravel(), gy.ravel()))
    d = ((grid[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    oracle = np.einsum("ij,ij->i", grid, grid) <= d
    return np.mean(oracle != vor.cell_of_origin(pts, box).contains(grid))


def test_grid_oracle():
    rng = stream_rng(1, 0)
    worst = max(_grid_disagreement(rng.uniform(-1, 1, size=(5, 2)), 2.0, 0.01) for _ in range(100))
    assert worst < 1e-3


@settings(max_examples=60, deadline=None)
@given(pts=configs, seed=st.integers(0, 2**16))
def test_permutation_invariance(pts, seed):
    pts = np.array(pts)
    perm = np.random.default_rng(seed).permutation(len(pts))
    a = vor.cell_of_origin(pts, 10.0).vertices
    b = vor.cell_of_origin(pts[perm], 10.0).vertices
    assert a.shape == b.shape
    np.testing.assert_allclose(np.sort(a, axis=0), np.sort(b, axis=0), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(pts=configs)
def test_convex_ccw_and_contains_origin(pts):
    cell = vor.cell_of_origin(np.array(pts), 10.0)
    v = cell.vertices
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    assert np.all(cross >= -1e-9)
    assert cell.contains([[0.0, 0.0]])[0]
    assert cell.circumradius == pytest.approx(np.max(np.hypot(*v.T)))


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(st.tuples(coords, coords), min_size=2, max_size=15, unique=True))
def test_circumradius_nonincreasing_under_insertion(pts):
    pts = np.array(pts)
    radii = [vor.cell_of_origin(pts[:k], 10.0).circumradius for k in range(1, len(pts) + 1)]
    assert np.all(np.diff(radii) <= 1e-9)


def test_lattice_radius_and_samples():
    s = vor.circumscribed_radius_samples(LatticeMix(1.5), 1000, seed=1)
    assert np.all(s.radii >= math.sqrt(2) / 2) and s.discarded == 0


def test_poisson_survival_below_calka():
    s = vor.circumscribed_radius_samples(Poisson(1.0), 10**4, seed=2)
    assert s.discard_rate < 1e-4
    p, lo, hi = s.survival(1.0)
    bound, valid = vor.calka_poisson_bound(1.0, 1.0)
    assert valid and lo[0] <= bound


def test_ginibre_survival_below_petal():
    s = vor.circumscribed_radius_samples(Ginibre(), 500, seed=3)
    p, lo, hi = s.survival([2.0, 3.0])
    assert lo[1] <= vor.ginibre_petal_bound(3.0) == pytest.approx(0.355, abs=1e-3)
    assert lo[0] <= 1.0


def test_radius_samples_independent_of_workers():
    a = vor.circumscribed_radius_samples(Poisson(2.0), 300, seed=4, shard_size=64, n_jobs=1)
    b = vor.circumscribed_radius_samples(Poisson(2.0), 300, seed=4, shard_size=64, n_jobs=4)
    np.testing.assert_array_equal(a.radii, b.radii)


def test_petal_area():
    expected = 2 * (math.pi / 7 + math.sin(math.pi / 7) * math.cos(3 * math.pi / 7))
    assert vor.petal_area(1.0) == pytest.approx(expected, rel=1e-15)
    assert vor.petal_area(1.0) == pytest.approx(1.09069, abs=1e-5)
    assert vor.petal_area(0.0) == 0.0
    with pytest.raises(InvalidParameterError):
        vor.petal_area(-1.0)


@given(r=st.floats(0.0, 1e3))
def test_petal_area_scaling(r):
    assert vor.petal_area(2 * r) == pytest.approx(4 * vor.petal_area(r), rel=1e-14)


def test_ginibre_petal_values_and_crossing():
    u, v = vor.ginibre_petal_uv(1.0)
    assert u == pytest.approx(0.1095, abs=1e-4) and v == pytest.approx(0.2099, abs=1e-4)
    assert vor.ginibre_petal_bound(1.0) == min(1.0, 7 * math.exp(-v))
    r_star = vor.ginibre_petal_crossing()
    assert abs(r_star - 0.5276) < 1e-4
    below = np.linspace(0.05, r_star - 1e-3, 50)
    above = np.linspace(r_star + 1e-3, 3.0, 50)
    assert np.all(np.subtract(*vor.ginibre_petal_uv(below)) > 0)
    assert np.all(np.subtract(*vor.ginibre_petal_uv(above)) < 0)
    far = vor.ginibre_petal_bound(np.linspace(r_star, 20.0, 400))
    assert np.all(np.diff(far) <= 0) and far[-1] < 1e-50
    assert np.all(np.diff(far[far < 1.0]) < 0)


def test_calka_bound():
    value, valid = vor.calka_poisson_bound(1.0, 1.0)
    assert value == pytest.approx(4 * math.pi * math.exp(-math.pi), rel=1e-14) and valid
    value, valid = vor.calka_poisson_bound(1.0, 2.0)
    assert value == pytest.approx(16 * math.pi * math.exp(-4 * math.pi), rel=1e-14)
    value, valid = vor.calka_poisson_bound(1.0, 0.2)
    assert not valid and value > 0
    # validity in the scaled radius r sqrt(lam)
    assert vor.calka_poisson_bound(4.0, 0.2)[1]


def test_generic_petal_bound():
    assert vor.generic_petal_bound(1.0, 0.5) == 1.0
    expected = 7 * math.exp(-(16 * vor.petal_area(1.0) / math.pi - 1))
    assert vor.generic_petal_bound(1 / math.pi, 4.0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.0736, abs=1e-4)
    r = np.linspace(0.05, 10.0, 400)
    assert np.all(vor.generic_petal_bound(1 / math.pi, r) >= vor.ginibre_petal_bound(r))


def test_bound_curve():
    c = vor.bound_curve("calka", [0.2, 1.0])
    assert list(c.valid) == [False, True]
    assert vor.bound_curve("ginibre-petal", [1.0]).bound[0] == 1.0
    with pytest.raises(InvalidParameterError):
        vor.bound_curve("nope", [1.0])


def test_kernel_l2():
    rep = vor.ginibre_kernel_l2(6.0)
    assert rep.intensity_gap <= 1e-10 and rep.gap <= 1e-10
    assert vor.ginibre_kernel_l2(0.0).closed_form == 0.0
    assert vor.ginibre_kernel_l2(1.0).closed_form == pytest.approx((1 - math.exp(-1)) / math.pi, rel=1e-14)
    assert vor.ginibre_kernel_l2(1.0).closed_form == pytest.approx(0.20122, abs=1e-5)


def test_growth_verdict():
    assert vor.growth_verdict([1.0, 1.01, 1.02]) == "stabilizing"
    assert vor.growth_verdict([1.0, 2.0, 4.0]) == "diverging"
    assert vor.growth_verdict([1.0, 2.0, 1.0]) == "inconclusive"


def test_condition_a_poisson():
    rep = vor.condition_a_report(Poisson(1.0), seed=5, checkpoints=(100, 1000, 10**4))
    x1 = rep.distance_means[1][-1]
    # |X_1|^2 ~ Exp(pi): mean 1/pi, standard deviation 1/pi
    assert abs(x1 - 1 / math.pi) < 3 / math.pi / 100
    assert rep.distance_means[2][-1] == pytest.approx(2 / math.pi, rel=0.05)
    assert rep.analytic == "" and rep.discard_rate == 0.0


def test_condition_a_ginibre():
    rep = vor.condition_a_report(Ginibre(), seed=6, checkpoints=(100, 500))
    assert rep.distance_means[1][-1] <= 2.0


def test_condition_a_lattice():
    rep = vor.condition_a_report(LatticeMix(1.5), seed=7)
    assert rep.verdict == "diverging"
    assert rep.analytic == "E0[R(o)^2] = inf"
    assert rep.to_dict()["checkpoints"] == [1000, 10000, 100000]


def test_lattice_palm_identity():
    rep = vor.lattice_palm_identity(1.5, 10**5, seed=8)
    assert rep.n_se <= 3.0
