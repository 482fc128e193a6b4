import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirtail import asymquad, sirmc
from sirtail.exceptions import InvalidParameterError, QuadratureError
from sirtail.fading import Deterministic, GammaFading, nakagami, rayleigh
from sirtail.models import Ginibre


def test_poisson_constant():
    assert asymquad.poisson_constant(2.0).value == pytest.approx(2 / math.pi, abs=1e-15)
    assert asymquad.poisson_constant(4.0).value == pytest.approx(0.900316, abs=5e-7)
    big = asymquad.poisson_constant(1e3)
    assert big.value == pytest.approx(0.99999836, abs=5e-9)
    assert big.method == "closed-form" and big.bracket_low == big.value == big.bracket_high
    with pytest.raises(InvalidParameterError):
        asymquad.poisson_constant(1.0)


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 4.0])
def test_general_and_beta_forms_agree(m, beta):
    a = asymquad.ginibre_constant(nakagami(m), beta)
    b = asymquad.ginibre_nakagami_constant(beta, m)
    assert abs(a.value - b.value) <= 1e-6 * b.value
    for est in (a, b):
        assert est.method == "quadrature" and est.std_error == 0.0
        assert est.bracket_low <= est.value <= est.bracket_high


def test_reference_values():
    # frozen from this implementation; both agree with Palm Monte Carlo (see acceptance criterion 6)
    assert asymquad.ginibre_nakagami_constant(2.0, 1.0).value == pytest.approx(0.8834733, abs=2e-7)
    assert asymquad.ginibre_constant(Deterministic(), 2.0).value == pytest.approx(0.8985445, abs=2e-7)


def test_beta_form_prefactor():
    est = asymquad.ginibre_nakagami_constant(2.0, 1.0)
    assert est.metadata["prefactor"] == pytest.approx(1.0, rel=1e-14)


def test_integrand_normalization_and_monotonicity():
    assert asymquad.ginibre_product(rayleigh(), 2.0, 0.0) == 1.0
    t = np.linspace(0.0, 6.0, 61)
    for fading in (rayleigh(), Deterministic(), nakagami(3.0)):
        vals = np.array([asymquad.ginibre_product(fading, 2.5, x) for x in t])
        assert np.all(np.diff(vals) <= 1e-15)
        assert vals[0] == 1.0 and vals[-1] < 1e-3


def test_tightened_tolerances_within_bracket():
    cfg = asymquad.QuadConfig()
    for beta in (1.5, 3.0):
        a = asymquad.ginibre_constant(nakagami(2.0), beta, cfg)
        b = asymquad.ginibre_constant(nakagami(2.0), beta, cfg.tightened())
        assert abs(a.value - b.value) <= a.bracket_high - a.bracket_low


def test_large_m_approaches_no_fading():
    quad = asymquad.ginibre_nakagami_constant(2.0, 64.0)
    mc = sirmc.estimate_palm_constant(Ginibre(), Deterministic(), 2.0, 3 * 10**4, 500, seed=2)
    assert abs(quad.value - mc.value) / mc.value < 0.01


def test_jensen_bound():
    c = asymquad.ginibre_constant(Deterministic(), 2.0)
    same = asymquad.jensen_lower_bound(Deterministic(), 2.0, c)
    assert same.value == pytest.approx(c.value, rel=1e-15)
    j = asymquad.jensen_lower_bound(nakagami(1.0), 2.0, c)
    assert j.metadata["coefficient"] == pytest.approx(math.gamma(1.5), rel=1e-14)
    assert asymquad.ginibre_nakagami_constant(2.0, 1.0).value >= j.value


@settings(max_examples=40, deadline=None)
@given(shape=st.floats(0.05, 100.0), scale=st.floats(0.01, 100.0), beta=st.floats(1.01, 20.0))
def test_jensen_coefficient_at_most_one(shape, scale, beta):
    unit = sirmc.ConstantEstimate(1.0, 0.0, 1.0, 1.0, "closed-form")
    coef = asymquad.jensen_lower_bound(GammaFading(shape, scale), beta, unit).value
    assert 0 < coef <= 1.0 + 1e-12


def test_jensen_rejects_infinite_mean():
    class Heavy(GammaFading):
        @property
        def mean(self):
            return math.inf

    unit = sirmc.ConstantEstimate(1.0, 0.0, 1.0, 1.0, "closed-form")
    with pytest.raises(InvalidParameterError):
        asymquad.jensen_lower_bound(Heavy(1.0), 2.0, unit)


def test_h_integral_identity():
    rep = asymquad.h_integral_identity_check(nakagami(1.0), 2.0)
    assert rep.closed_form == pytest.approx(math.pi**1.5 / 2, rel=1e-14)
    assert rep.rel_gap <= 1e-8
    assert asymquad.h_integral_identity_check(Deterministic(), 3.0).quadrature == pytest.approx(math.pi, rel=1e-12)
    assert asymquad.h_integral_identity_check(nakagami(4.0), 3.0).rel_gap <= 1e-8


def test_quad_config_validation():
    for kw in ({"abs_tol": 0.0}, {"laguerre_order": 8}, {"laguerre_order": 100}, {"t_max_rule": "fixed"},
               {"max_factors": 4}):
        with pytest.raises(InvalidParameterError):
            asymquad.QuadConfig(**kw)
    t = asymquad.QuadConfig().tightened()
    assert t.abs_tol == pytest.approx(1e-11) and t.max_factors == 2048


def test_cutoff_failure_reports_diagnostics():
    with pytest.raises(QuadratureError) as exc:
        asymquad.ginibre_constant(rayleigh(), 2.0, asymquad.QuadConfig(t_cap=1.5))
    assert "T" in exc.value.diagnostics
