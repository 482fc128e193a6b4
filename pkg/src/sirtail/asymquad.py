"""Deterministic evaluation of the SIR tail constants.

Poisson networks have the closed form ``(beta/pi) sin(pi/beta)`` for every
admissible fading law.  For the Ginibre network the constant is

    E[H**(1/beta)] / Gamma(1 + 1/beta) * int_0^inf prod_{i>=1} g_i(t) dt,
    g_i(t) = E[L_H((t / Y_i)**beta)],   Y_i ~ Gamma(i + 1, 1),

where ``L_H`` is the Laplace transform of the fading.  Each ``g_i`` is a
Gamma-weighted integral computed on a fixed rule in ``log u``.  The first
``n`` factors are computed exactly; the remaining ones are handled through
the moment expansion of ``1 - g_i`` for ``i > n``, which yields both a
second-order correction and a rigorous bracket:

    -D - Q  <=  sum_{i>n} log g_i  <=  min(0, -D + E)

with ``D = t**beta E[H] G1``, ``E = t**(2 beta) E[H**2] G2 / 2``,
``Q = t**(2 beta) E[H]**2 G2 / (2 (1 - d_{n+1}))`` and the telescoping sums
``G1 = sum_{i>n} E[Y_i**-beta]``, ``G2 = sum_{i>n} E[Y_i**(-2 beta)]``.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .exceptions import InvalidParameterError, QuadratureError
from .fading import Deterministic, GammaFading, condition_b_params
from .sirmc import ConstantEstimate
from .validation import check_beta, check_fading, check_positive

_PANEL_NODES = 16
_LADDER_START = 32


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances of the Ginibre quadrature.

    Attributes
    ----------
    abs_tol, rel_tol : float
        Tolerances of the outer adaptive integral over ``t``.
    laguerre_order : int
        Nodes of each inner Gamma-weighted integral; a multiple of 16.
    product_tail_tol : float
        Target width of the log-bracket of the truncated product; the
        truncation index doubles from 32 until the width is below it or
        ``max_factors`` is reached.
    t_max_rule : str
        ``"doubling"``: the cutoff ``T`` starts at ``t_start`` and doubles
        until ``prod(T) * T < abs_tol``.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    laguerre_order: int = 192
    product_tail_tol: float = 1e-9
    t_max_rule: str = "doubling"
    max_factors: int = 1024
    t_start: float = 1.0
    t_cap: float = 1e4

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "product_tail_tol"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be > 0")
        if self.laguerre_order < 16 or self.laguerre_order % _PANEL_NODES:
            raise InvalidParameterError("laguerre_order must be a multiple of 16 and >= 16")
        if self.t_max_rule != "doubling":
            raise InvalidParameterError(f"unknown t_max_rule {self.t_max_rule!r}")
        if self.max_factors < _LADDER_START:
            raise InvalidParameterError(f"max_factors must be >= {_LADDER_START}")

    def tightened(self, factor=10.0):
        """Copy with every tolerance divided by ``factor``."""
        return replace(
            self,
            abs_tol=self.abs_tol / factor,
            rel_tol=self.rel_tol / factor,
            product_tail_tol=self.product_tail_tol / factor,
            max_factors=self.max_factors * 2,
        )


# --------------------------------------------------------------------------
# closed forms


def poisson_constant(beta):
    """Tail constant of the Poisson network, ``(beta/pi) sin(pi/beta)``."""
    beta = check_beta(beta)
    value = beta / math.pi * math.sin(math.pi / beta)
    return ConstantEstimate(value, 0.0, value, value, "closed-form", {"beta": beta, "model": {"kind": "poisson"}})


# --------------------------------------------------------------------------
# inner Gamma-weighted rules


@lru_cache(maxsize=8)
def _inner_rules(n_factors, order):
    """Nodes ``u`` and normalized weights for ``Y_i ~ Gamma(i + 1, 1)``, ``i = 1..n``.

    Composite Gauss-Legendre in ``y = log u`` over the central
    ``1 - 2e-18`` mass of ``Y_i``, weighted by the Gamma density.
    """
    shapes = np.arange(2, n_factors + 2, dtype=float)[:, None]
    y_lo = np.log(special.gammaincinv(shapes, 1e-18))
    y_hi = np.log(special.gammainccinv(shapes, 1e-18))
    panels = order // _PANEL_NODES
    x, w = np.polynomial.legendre.leggauss(_PANEL_NODES)
    edges = y_lo + (y_hi - y_lo) * np.linspace(0.0, 1.0, panels + 1)[None, :]
    half = 0.5 * np.diff(edges, axis=1)
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
    y = (mid[:, :, None] + half[:, :, None] * x[None, None, :]).reshape(n_factors, -1)
    wy = (half[:, :, None] * w[None, None, :]).reshape(n_factors, -1)
    log_density = shapes * y - np.exp(y) - special.gammaln(shapes)
    weights = wy * np.exp(log_density)
    weights /= weights.sum(axis=1, keepdims=True)
    return np.exp(y), weights


def _log_factors(fading, beta, t, n, order):
    """``log g_i(t)`` for ``i = 1..n``."""
    u, w = _inner_rules(_rules_size(n), order)
    u, w = u[:n], w[:n]
    s = (t / u) ** beta
    deficit = np.einsum("ij,ij->i", w, fading.laplace_deficit(s))
    out = np.empty(n)
    small = deficit < 0.5
    out[small] = np.log1p(-deficit[small])
    if not small.all():
        g = np.einsum("ij,ij->i", w[~small], fading.laplace(s[~small]))
        with np.errstate(divide="ignore"):
            out[~small] = np.log(g)
    return out


# rules are cached for the next power of two so that every ladder step
# reuses one table
def _rules_size(n):
    return 1 << max(int(n - 1).bit_length(), 5)


def _tail_terms(fading, beta, t, n):
    """Second-order estimate and bracket of ``sum_{i>n} log g_i(t)``."""
    mean_h = fading.mean
    m2 = fading.second_moment
    g1 = math.exp(special.gammaln(n + 2 - beta) - special.gammaln(n + 1)) / (beta - 1.0)
    g2 = math.exp(special.gammaln(n + 2 - 2 * beta) - special.gammaln(n + 1)) / (2 * beta - 1.0)
    tb = t**beta
    d_next = tb * mean_h * math.exp(special.gammaln(n + 2 - beta) - special.gammaln(n + 2))
    first = tb * mean_h * g1
    second = tb * tb * g2 / 2.0
    hi = min(0.0, -first + m2 * second)
    val = min(hi, -first + (m2 - mean_h**2) * second)
    lo = -first - mean_h**2 * second / (1.0 - d_next) if d_next < 1.0 else -math.inf
    return lo, val, hi


def _truncation_index(fading, beta, t, cfg):
    n = max(_LADDER_START, int(math.ceil(2 * beta)) + 1)
    while True:
        lo, val, hi = _tail_terms(fading, beta, t, n)
        if hi - lo <= cfg.product_tail_tol or 2 * n > cfg.max_factors:
            return n, (lo, val, hi)
        n *= 2


def _product_terms(fading, beta, t, cfg):
    """``(lower, value, upper)`` of ``prod_i g_i(t)`` and the number of exact factors."""
    if t <= 0.0:
        return np.ones(3), 0
    n, tail = _truncation_index(fading, beta, t, cfg)
    head = float(np.sum(_log_factors(fading, beta, t, n, cfg.laguerre_order)))
    with np.errstate(under="ignore"):
        return np.exp(head + np.array(tail)), n


def ginibre_product(fading, beta, t, cfg=None):
    """Second-order estimate of ``prod_{i>=1} g_i(t)`` (the outer integrand)."""
    cfg = cfg or QuadConfig()
    fading = check_fading(fading)
    beta = check_beta(beta)
    t = float(t)
    if t < 0:
        raise InvalidParameterError("t must be >= 0")
    return float(_product_terms(fading, beta, t, cfg)[0][1])


def _product_integral(fading, beta, cfg):
    """Integrate ``prod_i g_i(t)`` over ``t >= 0``; returns ``(low, value, high, diagnostics)``."""
    T = cfg.t_start
    while True:
        upper_T = _product_terms(fading, beta, T, cfg)[0][2]
        if upper_T * T < cfg.abs_tol:
            break
        T *= 2.0
        if T > cfg.t_cap:
            raise QuadratureError(
                "outer integral cutoff did not converge",
                {"T": T, "integrand_at_T": float(upper_T), "beta": beta},
            )

    factors = []

    def integrand(t):
        vals, n = _product_terms(fading, beta, float(t), cfg)
        factors.append(n)
        return vals

    res, err, info = integrate.quad_vec(
        integrand, 0.0, T, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, norm="max", limit=2000, full_output=True
    )
    if not info.success:
        raise QuadratureError(
            "adaptive outer integral did not reach its tolerance",
            {"T": T, "error": float(err), "intervals": int(info.intervals.shape[0])},
        )
    tail_bound = upper_T * T
    diagnostics = {
        "t_max": T,
        "quad_error": float(err),
        "tail_bound": float(tail_bound),
        "evaluations": int(info.neval),
        "max_factors_used": int(max(factors)),
        "laguerre_order": cfg.laguerre_order,
    }
    low = max(res[0] - err, 0.0)
    high = res[2] + err + tail_bound
    return low, float(res[1]), high, diagnostics


def _ginibre_estimate(prefactor, fading_for_laplace, beta, cfg, meta):
    low, value, high, diag = _product_integral(fading_for_laplace, beta, cfg)
    meta = dict(meta, prefactor=prefactor, diagnostics=diag)
    return ConstantEstimate(prefactor * value, 0.0, prefactor * low, prefactor * high, "quadrature", meta)


def ginibre_constant(fading, beta, cfg=None):
    """Ginibre tail constant for a general fading law (infinite-product form).

    Returns a :class:`ConstantEstimate` whose bracket covers the product
    truncation, the outer quadrature error and the cutoff tail.
    """
    cfg = cfg or QuadConfig()
    fading = check_fading(fading)
    beta = check_beta(beta)
    condition_b_params(fading, beta)
    prefactor = fading.frac_moment(1.0 / beta) / special.gamma(1.0 + 1.0 / beta)
    meta = {"beta": beta, "model": {"kind": "ginibre"}, "fading": fading.to_dict(), "form": "general"}
    return _ginibre_estimate(prefactor, fading, beta, cfg, meta)


def ginibre_nakagami_constant(beta, m, cfg=None):
    """Ginibre tail constant under Nakagami-m fading (Beta-function form).

    ``beta / B(m, 1/beta) * int_0^inf prod_i E[(1 + (v/Y_i)**beta)**-m] dv``;
    the factors are the Laplace transform of ``Gamma(m, 1)``.
    """
    cfg = cfg or QuadConfig()
    beta = check_beta(beta)
    m = check_positive(m, "m")
    log_beta_fn = special.gammaln(m) + special.gammaln(1.0 / beta) - special.gammaln(m + 1.0 / beta)
    prefactor = beta * math.exp(-log_beta_fn)
    meta = {"beta": beta, "model": {"kind": "ginibre"}, "fading": {"kind": "nakagami", "m": m}, "form": "nakagami"}
    return _ginibre_estimate(prefactor, GammaFading(m, 1.0), beta, cfg, meta)


# --------------------------------------------------------------------------
# Jensen bound and the fading integral identity


def jensen_lower_bound(fading, beta, c_delta1):
    """Lower bound ``E[H**(1/beta)] / E[H]**(1/beta) * C(beta, delta_1)``.

    ``c_delta1`` is the constant of the same network without fading.
    """
    fading = check_fading(fading)
    beta = check_beta(beta)
    mean = fading.mean
    if not (math.isfinite(mean) and mean > 0):
        raise InvalidParameterError("the Jensen bound needs a finite mean")
    coef = fading.frac_moment(1.0 / beta) / mean ** (1.0 / beta)
    meta = dict(c_delta1.metadata, coefficient=coef, fading=fading.to_dict(), bound="jensen")
    return ConstantEstimate(
        coef * c_delta1.value,
        coef * c_delta1.std_error,
        coef * c_delta1.bracket_low,
        coef * c_delta1.bracket_high,
        c_delta1.method,
        meta,
    )


@dataclass
class IdentityReport:
    """Both sides of ``2 pi int_0^inf P(H > r**(2 beta)) r dr = pi E[H**(1/beta)]``."""

    quadrature: float
    closed_form: float
    quad_error: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def rel_gap(self):
        return abs(self.quadrature - self.closed_form) / abs(self.closed_form)

    def to_dict(self):
        return {
            "quadrature": self.quadrature,
            "closed_form": self.closed_form,
            "rel_gap": self.rel_gap,
            "quad_error": self.quad_error,
        }


def h_integral_identity_check(fading, beta, cfg=None):
    """Compare the radial integral of the fading survival with ``pi E[H**(1/beta)]``."""
    cfg = cfg or QuadConfig()
    fading = check_fading(fading)
    beta = check_beta(beta)

    def f(r):
        return 2.0 * math.pi * float(fading.survival(r ** (2.0 * beta))) * r

    if isinstance(fading, Deterministic):
        # the survival is the indicator of r < 1
        pieces = [(0.0, 1.0)]
    else:
        # split where H's survival starts to decay and far in its tail
        r_mid = fading.mean ** (1.0 / (2.0 * beta))
        r_far = special.gammainccinv(fading.shape, 1e-300) * fading.scale if isinstance(fading, GammaFading) else None
        r_far = max(r_far ** (1.0 / (2.0 * beta)), 2 * r_mid) if r_far else 10.0 * r_mid
        pieces = [(0.0, r_mid), (r_mid, r_far), (r_far, math.inf)]
    total, err = 0.0, 0.0
    for a, b in pieces:
        val, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=500)
        total += val
        err += e
    return IdentityReport(total, math.pi * fading.frac_moment(1.0 / beta), err)
