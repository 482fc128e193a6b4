import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirtail.exceptions import ConditionViolatedError, InvalidParameterError
from sirtail.fading import (
    Deterministic,
    FadingSpec,
    GammaFading,
    condition_b_params,
    frac_moment,
    laplace,
    nakagami,
    parse_fading,
    rayleigh,
    sample,
)
from sirtail.streams import stream_rng

SPECS = [Deterministic(), rayleigh(), nakagami(0.5), nakagami(2.0), nakagami(4.0), GammaFading(2.0, 0.5)]


def test_laplace_examples():
    assert laplace(GammaFading(1, 1), 1.0) == pytest.approx(0.5, abs=1e-15)
    for m in (0.5, 1.0, 3.0):
        s = np.array([0.1, 1.0, 7.0])
        np.testing.assert_allclose(laplace(nakagami(m), s), (1 + s / m) ** (-m), rtol=1e-14)
    assert laplace(Deterministic(), 2.0) == pytest.approx(math.exp(-2.0))
    for spec in SPECS:
        assert laplace(spec, 0.0) == 1.0


def test_laplace_rejects_negative_argument():
    with pytest.raises(InvalidParameterError):
        laplace(rayleigh(), -1e-3)


def test_laplace_deficit_is_accurate_near_zero():
    s = 1e-12
    assert rayleigh().laplace_deficit(s) == pytest.approx(s, rel=1e-9)
    assert Deterministic().laplace_deficit(s) == pytest.approx(s, rel=1e-9)


@pytest.mark.parametrize("spec", SPECS, ids=repr)
def test_laplace_nonincreasing_and_log_convex(spec):
    s = np.logspace(-3, 2, 200)
    log_l = np.log(spec.laplace(s))
    assert np.all(np.diff(log_l) <= 0)
    # log-convexity in s on a uniform grid
    u = np.linspace(0.0, 20.0, 201)
    second = np.diff(np.log(spec.laplace(u)), 2)
    assert np.all(second >= -1e-12)


def test_frac_moment_examples():
    assert frac_moment(nakagami(1.0), 0.5) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)
    assert frac_moment(Deterministic(), 0.3) == 1.0
    for m in (0.5, 2.0, 4.0):
        beta = 3.0
        expected = math.gamma(m + 1 / beta) / (m ** (1 / beta) * math.gamma(m))
        assert frac_moment(nakagami(m), 1 / beta) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_frac_moment_rejects_order(p):
    with pytest.raises(InvalidParameterError):
        frac_moment(rayleigh(), p)


def test_frac_moment_matches_monte_carlo():
    h = rayleigh().sample(stream_rng(1, 0), size=10**6)
    est = np.sqrt(h)
    se = est.std() / math.sqrt(h.size)
    assert abs(est.mean() - frac_moment(rayleigh(), 0.5)) < 3 * se


@given(m=st.floats(0.05, 50.0), scale=st.floats(0.01, 10.0), p=st.floats(0.01, 1.0))
def test_frac_moment_jensen(m, scale, p):
    spec = GammaFading(m, scale)
    assert spec.frac_moment(p) <= spec.mean**p * (1 + 1e-12)


@given(m=st.floats(0.01, 1e3))
def test_nakagami_has_unit_mean(m):
    assert nakagami(m).mean == pytest.approx(1.0, rel=1e-12)


def test_condition_b_examples():
    assert condition_b_params(GammaFading(2.0, 0.5), 2.0) == (2.0, 4.0)
    s = np.logspace(0, 6, 500)
    assert np.all(GammaFading(2.0, 0.5).laplace(s) * s**2 <= 4.0)
    assert condition_b_params(Deterministic(), 1.5) == (1.0, 1.0)
    alpha, c_h = condition_b_params(nakagami(4.0), 2.0)
    assert alpha == 4.0 and c_h == pytest.approx(256.0, rel=1e-12)


def test_condition_b_rejects_bad_certificate():
    class Overclaim(GammaFading):
        def decay_params(self):
            return self.shape + 1.0, 1.0

    with pytest.raises(ConditionViolatedError):
        condition_b_params(Overclaim(1.0, 1.0), 2.0)


def test_condition_b_rejects_atom_at_zero():
    class ZeroInflated(FadingSpec):
        # H = 0 with probability 1/2, else Exp(1)
        mean = 0.5
        second_moment = 1.0

        def laplace(self, s):
            return 0.5 + 0.5 / (1.0 + np.asarray(s, dtype=float))

        def frac_moment(self, p):
            return 0.5 * math.gamma(1 + p)

        def survival(self, x):
            return 0.5 * np.exp(-np.asarray(x, dtype=float))

        def sample(self, rng, size=None):
            return rng.exponential(size=size) * (rng.random(size) < 0.5)

        def decay_params(self):
            return 1.0, 1.0

        def to_dict(self):
            return {"kind": "zero-inflated"}

    with pytest.raises(ConditionViolatedError):
        condition_b_params(ZeroInflated(), 2.0)


def test_sampling_moments():
    rng = stream_rng(5, 1)
    assert np.all(sample(Deterministic(), rng, 10) == 1.0)
    assert sample(Deterministic(), rng) == 1.0
    h = nakagami(2.0).sample(rng, size=10**6)
    assert abs(h.mean() - 1.0) < 3 * h.std() / 1e3
    r = rayleigh().sample(rng, size=10**6)
    assert r.var() == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("spec", SPECS[1:], ids=repr)
@pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
def test_laplace_matches_monte_carlo(spec, s):
    h = spec.sample(stream_rng(11, 2), size=2 * 10**5)
    vals = np.exp(-s * h)
    assert abs(vals.mean() - spec.laplace(s)) < 3 * vals.std() / math.sqrt(h.size) + 1e-12


def test_parse_fading():
    assert parse_fading("rayleigh") == rayleigh()
    assert parse_fading("delta") == Deterministic()
    assert parse_fading("nakagami:2") == nakagami(2.0)
    assert parse_fading("gamma:2,0.5") == GammaFading(2.0, 0.5)
    assert parse_fading({"kind": "nakagami", "m": 2.0}) == nakagami(2.0)
    for bad in ("lognormal", "nakagami", "nakagami:x", {"kind": "gamma"}, {"kind": "nakagami", "m": 1, "x": 2}, 3):
        with pytest.raises(InvalidParameterError):
            parse_fading(bad)
    with pytest.raises(InvalidParameterError):
        GammaFading(0.0, 1.0)
