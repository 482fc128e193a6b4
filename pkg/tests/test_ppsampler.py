import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from sirtail import ppsampler as pp
from sirtail.exceptions import InvalidParameterError, SamplerStallError
from sirtail.models import Ginibre, Poisson
from sirtail.streams import stream_rng


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(1, 300), lam=st.floats(0.01, 100.0), palm=st.booleans())
def test_radii_strictly_increasing(seed, n, lam, palm):
    rng = stream_rng(seed, 0)
    for sample in (pp.sample_poisson_radii(lam, n, rng), pp.sample_ginibre_radii(palm, n, rng)):
        assert len(sample) == n
        assert sample.radii[0] > 0 and np.all(np.diff(sample.radii) > 0)


def test_radii_sample_rejects_unsorted():
    with pytest.raises(InvalidParameterError):
        pp.RadiiSample(np.array([1.0, 0.5]), Poisson(), True, 1.0)
    with pytest.raises(InvalidParameterError):
        pp.sample_poisson_radii(1.0, 0, stream_rng(0))
    with pytest.raises(InvalidParameterError):
        pp.sample_poisson_radii(-1.0, 3, stream_rng(0))


def test_poisson_nearest_distance_ks():
    r2 = pp.poisson_radii_sq(1.0, 1, 10**5, stream_rng(1, 0))[:, 0]
    # P(r1 > r) = exp(-pi r^2): pi r1^2 is standard exponential
    res = stats.kstest(math.pi * r2, "expon")
    assert res.pvalue > 0.01


@pytest.mark.parametrize("k", [1, 2, 5])
def test_poisson_kth_distance_law(k):
    lam, n = 1.0, 10**5
    r2 = pp.poisson_radii_sq(lam, k, n, stream_rng(12, k))[:, k - 1]

    def cdf(x):
        # 1 - exp(-lam pi r^2) sum_{j<k} (lam pi r^2)^j / j!, written in r^2
        y = lam * math.pi * np.asarray(x)
        return 1.0 - np.exp(-y) * sum(y**j / math.factorial(j) for j in range(k))

    assert stats.kstest(r2, cdf).pvalue > 0.01


def test_poisson_ks_pvalues_uniform_over_seeds():
    pvals = []
    for seed in range(200):
        r2 = pp.poisson_radii_sq(1.0, 2, 2000, stream_rng(seed, 77))[:, 1]
        pvals.append(stats.kstest(math.pi * r2, stats.gamma(2).cdf).pvalue)
    assert stats.kstest(pvals, "uniform").pvalue > 0.01


def test_poisson_count_oracle():
    r2 = pp.poisson_radii_sq(1 / math.pi, 40, 10**5, stream_rng(3, 0))
    counts = (r2 <= 1.0).sum(axis=1)
    assert abs(counts.mean() - 1.0) < 3 * counts.std() / math.sqrt(counts.size)


def test_ginibre_palm_first_index_mean():
    y = pp.ginibre_radii_sq(3, 10**5, stream_rng(4, 0), palm=True, sort=False)[:, 0]
    assert abs(y.mean() - 2.0) < 3 * y.std() / math.sqrt(y.size)


def test_kostlan_stationary_sum():
    assert special.gammainc(np.arange(1, 101), 4.0).sum() == pytest.approx(4.0, abs=1e-8)


@pytest.mark.parametrize("palm", [True, False])
def test_kostlan_count_identity(palm):
    r, n = 1.5, 10**5
    y = pp.ginibre_radii_sq(60, n, stream_rng(5, int(palm)), palm=palm, sort=False)
    counts = (y <= r * r).sum(axis=1)
    expected = r * r + math.expm1(-r * r) if palm else r * r
    assert abs(counts.mean() - expected) < 3 * counts.std() / math.sqrt(n)


def test_lattice_palm_draws():
    draw = pp.sample_lattice_palm(1.5, stream_rng(6, 0), size=10**6)
    assert np.all(draw.T >= 1.0)
    p = np.mean(draw.T > 2.0)
    assert abs(p - 2**-1.5) < 3 * math.sqrt(p * (1 - p) / 10**6)
    # Palm mean a / (a - 1) = 3 (finite, infinite variance: loose check on the median-of-means)
    means = draw.T.reshape(100, -1).mean(axis=1)
    assert abs(np.median(means) - 3.0) < 0.15
    assert pp.LatticePalmDraw(1.0, 1.5).circumradius == pytest.approx(math.sqrt(2) / 2)
    with pytest.raises(InvalidParameterError):
        pp.sample_lattice_palm(2.5, stream_rng(0))


def test_lattice_stationary_law():
    t = pp.sample_lattice_stationary_T(1.5, stream_rng(6, 1), size=10**5)
    p = np.mean(t > 4.0)
    assert abs(p - 4.0**-0.5) < 3 * math.sqrt(p * (1 - p) / t.size)


def test_poisson_planar_count():
    rng = stream_rng(7, 0)
    counts = np.array([len(pp.sample_poisson_planar_palm(1.0, 2.0, rng)) for _ in range(4000)])
    assert abs(counts.mean() - 4 * math.pi) < 3 * math.sqrt(4 * math.pi / counts.size)


def test_poisson_planar_annuli_uncorrelated():
    rng = stream_rng(7, 1)
    inner, outer = [], []
    for _ in range(4000):
        r = np.hypot(*pp.sample_poisson_planar_palm(1.0, 2.0, rng).points.T)
        inner.append(np.sum(r < 1.0))
        outer.append(np.sum(r >= 1.0))
    corr = np.corrcoef(inner, outer)[0, 1]
    assert abs(corr) < 3 / math.sqrt(len(inner))


def test_ginibre_disk_modes():
    modes = pp.ginibre_disk_modes(6.0)
    assert modes.expected_count == pytest.approx(36.0 + math.expm1(-36.0), abs=1e-9)
    assert modes.dropped_mass < 1e-9


def test_ginibre_planar_intensity():
    R, n = 3.0, 3000
    rng = stream_rng(8, 0)
    samples = [pp.sample_ginibre_planar_palm(R, rng) for _ in range(n)]
    counts = np.array([len(s) for s in samples])
    assert abs(counts.mean() - (R * R + math.expm1(-R * R))) < 3 * counts.std() / math.sqrt(n)
    radii = np.concatenate([np.hypot(*s.points.T) for s in samples])
    assert np.all(radii <= R)
    edges = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
    for lo, hi in zip(edges[:-1], edges[1:]):
        # integral of (1/pi)(1 - exp(-r^2)) over the annulus
        expected = (hi**2 - lo**2) + (math.exp(-hi**2) - math.exp(-lo**2))
        per_sample = np.array([np.sum((np.hypot(*s.points.T) >= lo) & (np.hypot(*s.points.T) < hi))
                               for s in samples])
        assert abs(per_sample.mean() - expected) < 3 * per_sample.std() / math.sqrt(n) + 1e-9


def test_ginibre_planar_small_window_is_empty():
    rng = stream_rng(8, 1)
    assert sum(len(pp.sample_ginibre_planar_palm(0.01, rng)) for _ in range(100)) == 0


def test_ginibre_planar_stall_and_validation():
    with pytest.raises(SamplerStallError) as exc:
        pp.sample_ginibre_planar_palm(4.0, stream_rng(9, 0), max_proposals=1)
    assert "proposals" in exc.value.diagnostics
    with pytest.raises(InvalidParameterError):
        pp.sample_ginibre_planar_palm(0.0, stream_rng(0))
    with pytest.raises(InvalidParameterError):
        pp.sample_ginibre_planar_palm(1.0, stream_rng(0), eig_cutoff=1.5)


def test_samplers_deterministic():
    a = pp.sample_ginibre_planar_palm(4.0, stream_rng(10, 0)).points
    b = pp.sample_ginibre_planar_palm(4.0, stream_rng(10, 0)).points
    np.testing.assert_array_equal(a, b)
