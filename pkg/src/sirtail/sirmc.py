"""Monte Carlo engines for the downlink SIR tail and its asymptotic constant.

Two estimators are provided:

* the stationary tail ``P(SIR > theta)`` for the user at the origin served
  by its nearest base station, and
* the Palm expectation giving the limit of ``theta**(1/beta) P(SIR > theta)``,
  ``pi lam E[H**(1/beta)] E0[(sum_i H_i |X_i|**(-2 beta))**(-1/beta)]``.

Both keep only the nearest ``n_points`` base stations.  The interference
from the discarded ones is replaced by its conditional mean, and the
estimate without that correction is reported alongside so that the pair
brackets the truncation effect.

Replicates are split into fixed-size shards, each driven by its own
``(seed, stream, shard)`` random stream, so results do not depend on the
number of worker threads.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import ppsampler
from .exceptions import InvalidParameterError
from .fading import condition_b_params
from .models import Ginibre, LatticeMix, Poisson
from .streams import map_shards
from .validation import (
    check_beta,
    check_count,
    check_fading,
    check_model,
    check_n_points,
    check_seed,
    check_theta_grid,
)

WILSON_Z = 1.959963984540054  # two-sided 95%
DEFAULT_THETA = np.logspace(1.0, 5.0, 20)
DEFAULT_SHARD_SIZE = 8192

STREAM_TAIL = 1
STREAM_PALM = 2


@dataclass
class TailCurve:
    """Estimated ``P(SIR > theta)`` on a threshold grid.

    ``p_hat`` includes the mean residual interference of the discarded
    base stations; ``p_truncated`` ignores it and is therefore an upper
    estimate.  ``scaled`` is ``theta**(1/beta) * p_hat``.
    """

    beta: float
    model: object
    fading: object
    theta: np.ndarray
    p_hat: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    p_truncated: np.ndarray
    n_samples: int
    n_points: int
    seed: int

    @property
    def scaled(self):
        return self.theta ** (1.0 / self.beta) * self.p_hat

    @property
    def entries(self):
        return list(zip(self.theta, self.p_hat, self.ci_low, self.ci_high, self.scaled))

    def to_dict(self):
        return {
            "kind": "tail_curve",
            "beta": self.beta,
            "model": self.model.to_dict(),
            "fading": self.fading.to_dict(),
            "n_samples": self.n_samples,
            "n_points": self.n_points,
            "seed": self.seed,
            "theta": self.theta.tolist(),
            "p_hat": self.p_hat.tolist(),
            "ci_low": self.ci_low.tolist(),
            "ci_high": self.ci_high.tolist(),
            "scaled": self.scaled.tolist(),
            "p_truncated": self.p_truncated.tolist(),
        }


@dataclass
class ConstantEstimate:
    """An asymptotic constant with its truncation bracket and standard error."""

    value: float
    std_error: float
    bracket_low: float
    bracket_high: float
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("closed-form", "quadrature", "palm-mc"):
            raise InvalidParameterError(f"unknown method tag {self.method!r}")

    def to_dict(self):
        return {
            "value": self.value,
            "std_error": self.std_error,
            "bracket_low": self.bracket_low,
            "bracket_high": self.bracket_high,
            "method": self.method,
            "metadata": self.metadata,
        }


def wilson_interval(successes, total, z=WILSON_Z):
    """Wilson score interval for a binomial proportion (vectorized)."""
    successes = np.asarray(successes, dtype=float)
    p = successes / total
    denom = 1.0 + z**2 / total
    center = (p + z**2 / (2.0 * total)) / denom
    half = z * np.sqrt(p * (1.0 - p) / total + z**2 / (4.0 * total**2)) / denom
    return np.clip(center - half, 0.0, p), np.clip(center + half, p, 1.0)


# --------------------------------------------------------------------------
# shard kernels


def _simulation_model(model):
    if isinstance(model, LatticeMix):
        raise InvalidParameterError("the lattice counterexample has no radii sampler; use the voronoi tools")
    return model


def _radii_sq(model, palm, n_points, size, rng):
    if isinstance(model, Poisson):
        return ppsampler.poisson_radii_sq(model.intensity, n_points, size, rng)
    # the Palm sum does not depend on the order of the Kostlan radii
    return ppsampler.ginibre_radii_sq(n_points, size, rng, palm=palm, sort=not palm)


def residual_interference(model, palm, beta, mean_h, last_r2, n_points):
    """Mean interference from the base stations beyond the first ``n_points``.

    Poisson: conditionally on ``r_N``, the discarded points form a Poisson
    process outside ``D_{r_N}``, so the mean is
    ``lam pi E[H] r_N**(2 - 2 beta) / (beta - 1)``.
    Ginibre: the discarded Kostlan radii are the independent
    ``Gamma(i + d, 1)`` with ``i > N`` (``d = 1`` under Palm), and
    ``sum_{i > N} E[Y_i**-beta]`` telescopes to
    ``Gamma(N + 1 + d - beta) / ((beta - 1) Gamma(N + d))``.
    """
    if isinstance(model, Poisson):
        r2 = np.asarray(last_r2, dtype=float)
        return model.intensity * math.pi * mean_h * r2 ** (1.0 - beta) / (beta - 1.0)
    d = 1.0 if palm else 0.0
    tail = math.exp(special.gammaln(n_points + 1 + d - beta) - special.gammaln(n_points + d)) / (beta - 1.0)
    return np.full(np.shape(last_r2), mean_h * tail)


def sir_values(r2, h, beta, residual=0.0):
    """SIR of the user at the origin served by the nearest base station.

    Parameters
    ----------
    r2 : ndarray, shape (n, N)
        Squared distances, ascending along each row.
    h : ndarray, shape (n, N)
        Propagation effects.
    beta : float
    residual : float or ndarray, shape (n,)
        Interference added for the base stations beyond the ``N``-th.
    """
    gain = h * r2 ** (-beta)
    return gain[:, 0] / (gain[:, 1:].sum(axis=1) + residual)


def _sir_shard(model, fading, beta, n_points):
    def run(size, rng):
        r2 = _radii_sq(model, False, n_points, size, rng)
        h = fading.sample(rng, size=(size, n_points))
        resid = residual_interference(model, False, beta, fading.mean, r2[:, -1], n_points)
        return sir_values(r2, h, beta, resid), sir_values(r2, h, beta)

    return run


def _palm_shard(model, fading, beta, n_points):
    def run(size, rng):
        r2 = _radii_sq(model, True, n_points, size, rng)
        h = fading.sample(rng, size=(size, n_points))
        s = (h * r2 ** (-beta)).sum(axis=1)
        last = r2.max(axis=1)
        resid = residual_interference(model, True, beta, fading.mean, last, n_points)
        low = (s + resid) ** (-1.0 / beta)
        high = s ** (-1.0 / beta)
        return np.array([low.sum(), np.square(low).sum(), high.sum(), size], dtype=float)

    return run


def _prepare(model, fading, beta, n_points, seed):
    model = _simulation_model(check_model(model))
    fading = check_fading(fading)
    beta = check_beta(beta, simulation=True)
    condition_b_params(fading, beta)
    return model, fading, beta, check_n_points(n_points), check_seed(seed)


# --------------------------------------------------------------------------
# public engines


def simulate_sir(model, fading, beta, n_samples=10**6, n_points=500, seed=0, n_jobs=1,
                 shard_size=DEFAULT_SHARD_SIZE, stream=(STREAM_TAIL,)):
    """Per-replicate SIR values ``(corrected, truncated)`` in replicate order."""
    model, fading, beta, n_points, seed = _prepare(model, fading, beta, n_points, seed)
    n_samples = check_count(n_samples, "n_samples")
    parts = map_shards(_sir_shard(model, fading, beta, n_points), n_samples, seed, stream, shard_size, n_jobs)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _tail_from_sir(sir, sir_trunc, theta):
    n = sir.size
    sorted_sir = np.sort(sir)
    exceed = n - np.searchsorted(sorted_sir, theta, side="right")
    exceed_trunc = n - np.searchsorted(np.sort(sir_trunc), theta, side="right")
    lo, hi = wilson_interval(exceed, n)
    return exceed / n, lo, hi, exceed_trunc / n, sorted_sir


def estimate_sir_tail(model, fading, beta, theta_grid=None, n_samples=10**6, n_points=500, seed=0,
                      n_jobs=1, shard_size=DEFAULT_SHARD_SIZE):
    """Monte Carlo estimate of ``P(SIR > theta)`` with 95% Wilson intervals.

    Parameters
    ----------
    model : ProcessModel or str
        ``Poisson`` or ``Ginibre`` (stationary radii).
    fading : FadingSpec or str
    beta : float
        Path-loss half-exponent; the path loss is ``r**(-2 beta)``.
    theta_grid : array-like, optional
        Positive ascending thresholds; 20 log-spaced values in
        ``[10, 1e5]`` by default.
    n_samples, n_points : int
        Number of replicates and of base stations kept per replicate.
    seed : int
        Experiment seed.
    n_jobs : int
        Worker threads; the result does not depend on it.

    Returns
    -------
    TailCurve
    """
    theta = check_theta_grid(DEFAULT_THETA if theta_grid is None else theta_grid)
    model, fading, beta, n_points, seed = _prepare(model, fading, beta, n_points, seed)
    sir, sir_trunc = simulate_sir(model, fading, beta, n_samples, n_points, seed, n_jobs, shard_size)
    p_hat, lo, hi, p_trunc, _ = _tail_from_sir(sir, sir_trunc, theta)
    return TailCurve(beta, model, fading, theta, p_hat, lo, hi, p_trunc, int(n_samples), n_points, seed)


def estimate_palm_constant(model, fading, beta, n_samples=10**5, n_points=500, seed=0, n_jobs=1,
                           shard_size=DEFAULT_SHARD_SIZE, stream=(STREAM_PALM,)):
    """Palm Monte Carlo estimate of the tail constant ``lim theta**(1/beta) P(SIR > theta)``.

    The value uses the residual-corrected sum ``S + dS``; by Jensen's
    inequality (conditionally on the kept points) its mean is a lower
    estimate, while the truncated sum ``S`` gives the upper end of the
    bracket.
    """
    model, fading, beta, n_points, seed = _prepare(model, fading, beta, n_points, seed)
    n_samples = check_count(n_samples, "n_samples", minimum=2)
    parts = map_shards(_palm_shard(model, fading, beta, n_points), n_samples, seed, stream, shard_size, n_jobs)
    total = np.sum(parts, axis=0)
    n = total[3]
    mean_low = total[0] / n
    var = max(total[1] / n - mean_low**2, 0.0) * n / (n - 1.0)
    factor = math.pi * model.intensity * fading.frac_moment(1.0 / beta)
    value = factor * mean_low
    return ConstantEstimate(
        value=value,
        std_error=factor * math.sqrt(var / n),
        bracket_low=value,
        bracket_high=factor * total[2] / n,
        method="palm-mc",
        metadata={
            "beta": beta,
            "model": model.to_dict(),
            "fading": fading.to_dict(),
            "n_points": n_points,
            "n_samples": int(n_samples),
            "seed": seed,
        },
    )


@dataclass
class InvarianceReport:
    """Two Palm-constant estimates at different intensities and their gap."""

    estimates: list
    difference: float
    combined_se: float
    tolerance_se: float = 3.0

    @property
    def n_se(self):
        return self.difference / self.combined_se if self.combined_se > 0 else math.inf

    @property
    def consistent(self):
        return abs(self.difference) <= self.tolerance_se * self.combined_se

    def to_dict(self):
        return {
            "estimates": [e.to_dict() for e in self.estimates],
            "difference": self.difference,
            "combined_se": self.combined_se,
            "n_se": self.n_se,
            "consistent": self.consistent,
        }


def check_intensity_invariance(models, fading, beta, n_samples=10**5, n_points=500, seed=0, n_jobs=1,
                               tolerance_se=3.0):
    """Estimate the Palm constant for two Poisson intensities and compare.

    Each model uses its own random stream, so the two estimates are
    independent.
    """
    models = [check_model(m) for m in models]
    if len(models) != 2 or not all(isinstance(m, Poisson) for m in models):
        raise InvalidParameterError("intensity invariance compares exactly two Poisson models")
    estimates = [
        estimate_palm_constant(m, fading, beta, n_samples, n_points, seed, n_jobs, stream=(STREAM_PALM, 100 + j))
        for j, m in enumerate(models)
    ]
    diff = estimates[0].value - estimates[1].value
    se = math.hypot(estimates[0].std_error, estimates[1].std_error)
    return InvarianceReport(estimates, diff, se, tolerance_se)


# --------------------------------------------------------------------------
# estimator API


class SIRTailEstimator(BaseEstimator):
    """Empirical SIR tail of a downlink cellular model.

    ``fit`` simulates the SIR at the typical user; ``predict`` returns the
    empirical ``P(SIR > theta)`` at arbitrary thresholds.

    Parameters
    ----------
    model : ProcessModel or str, default="poisson:1"
    fading : FadingSpec or str, default="rayleigh"
    beta : float, default=2.0
    n_samples : int, default=1_000_000
    n_points : int, default=500
    seed : int, default=0
    n_jobs : int, default=1
    shard_size : int, default=8192

    Attributes
    ----------
    tail_curve_ : TailCurve
        Estimates on the grid passed to ``fit``.
    sir_ : ndarray
        Sorted residual-corrected SIR samples.

    Examples
    --------
    >>> est = SIRTailEstimator(n_samples=20_000, n_points=100, seed=3).fit([1.0, 10.0])
    >>> est.predict([1.0]).shape
    (1,)
    """

    def __init__(self, model="poisson:1", fading="rayleigh", beta=2.0, n_samples=10**6, n_points=500,
                 seed=0, n_jobs=1, shard_size=DEFAULT_SHARD_SIZE):
        self.model = model
        self.fading = fading
        self.beta = beta
        self.n_samples = n_samples
        self.n_points = n_points
        self.seed = seed
        self.n_jobs = n_jobs
        self.shard_size = shard_size

    def fit(self, X=None, y=None):
        theta = check_theta_grid(DEFAULT_THETA if X is None else X)
        model, fading, beta, n_points, seed = _prepare(self.model, self.fading, self.beta, self.n_points, self.seed)
        sir, sir_trunc = simulate_sir(model, fading, beta, self.n_samples, n_points, seed, self.n_jobs,
                                      self.shard_size)
        p_hat, lo, hi, p_trunc, self.sir_ = _tail_from_sir(sir, sir_trunc, theta)
        self.tail_curve_ = TailCurve(beta, model, fading, theta, p_hat, lo, hi, p_trunc,
                                     int(self.n_samples), n_points, seed)
        return self

    def predict(self, X):
        check_is_fitted(self, "sir_")
        theta = np.asarray(X, dtype=float).ravel()
        n = self.sir_.size
        return (n - np.searchsorted(self.sir_, theta, side="right")) / n


class PalmConstantEstimator(BaseEstimator):
    """Palm Monte Carlo estimator of the SIR tail constant.

    After ``fit``, ``predict(theta)`` returns the asymptotic approximation
    ``constant * theta**(-1/beta)`` of ``P(SIR > theta)``.
    """

    def __init__(self, model="poisson:1", fading="rayleigh", beta=2.0, n_samples=10**5, n_points=500,
                 seed=0, n_jobs=1, shard_size=DEFAULT_SHARD_SIZE):
        self.model = model
        self.fading = fading
        self.beta = beta
        self.n_samples = n_samples
        self.n_points = n_points
        self.seed = seed
        self.n_jobs = n_jobs
        self.shard_size = shard_size

    def fit(self, X=None, y=None):
        self.constant_ = estimate_palm_constant(self.model, self.fading, self.beta, self.n_samples,
                                                self.n_points, self.seed, self.n_jobs, self.shard_size)
        return self

    def predict(self, X):
        check_is_fitted(self, "constant_")
        theta = np.asarray(X, dtype=float).ravel()
        return self.constant_.value * theta ** (-1.0 / self.constant_.metadata["beta"])
