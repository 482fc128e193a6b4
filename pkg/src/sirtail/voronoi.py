"""Typical Voronoi cell geometry and circumscribed-radius tail bounds.

The cell of the origin is built by clipping a square box with the
half-planes ``{x : |x| <= |x - X_i|}`` in order of increasing ``|X_i|``.
The circumscribed radius ``R(o)`` is the largest vertex distance from the
origin.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import ppsampler
from .exceptions import InvalidParameterError
from .models import Ginibre, LatticeMix, Poisson
from .sirmc import wilson_interval
from .streams import map_shards, stream_rng
from .validation import check_count, check_model, check_positive, check_seed

SIDE_EPS = 1e-12
CALKA_R0 = 0.337
STREAM_RADIUS = 3
STREAM_CONDITION_A = 4

_SIN_PI7 = math.sin(math.pi / 7.0)
_COS_3PI7 = math.cos(3.0 * math.pi / 7.0)
_COS_PI7 = math.cos(math.pi / 7.0)
_COS_2PI7 = math.cos(2.0 * math.pi / 7.0)
_PETAL_COEF = 2.0 * (math.pi / 7.0 + _SIN_PI7 * _COS_3PI7)


@dataclass
class CellPolygon:
    """Convex cell of the origin, vertices in counter-clockwise order.

    ``bounded`` is False when an edge of the initial clipping box survives,
    i.e. the points seen so far do not enclose the cell.
    """

    vertices: np.ndarray
    bounded: bool

    @property
    def circumradius(self):
        if len(self.vertices) == 0:
            return 0.0
        return float(np.max(np.hypot(self.vertices[:, 0], self.vertices[:, 1])))

    @property
    def area(self):
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def contains(self, pts, eps=0.0):
        """Vectorized membership test for an ``(n, 2)`` array of points."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        v = self.vertices
        inside = np.ones(len(pts), dtype=bool)
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
            inside &= cross >= -eps
        return inside


def _clip(poly, labels, px, py, label):
    """Clip a convex polygon by ``x*px + y*py <= (px**2 + py**2) / 2``."""
    c = 0.5 * (px * px + py * py)
    tol = SIDE_EPS * max(c, 1.0)
    out, out_labels = [], []
    n = len(poly)
    side = [x * px + y * py - c for x, y in poly]
    for i in range(n):
        j = (i + 1) % n
        si, sj = side[i], side[j]
        cur_in, nxt_in = si <= tol, sj <= tol
        if cur_in:
            out.append(poly[i])
            out_labels.append(labels[i])
            if not nxt_in:
                t = si / (si - sj)
                (x0, y0), (x1, y1) = poly[i], poly[j]
                out.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
                out_labels.append(label)
        elif nxt_in:
            t = si / (si - sj)
            (x0, y0), (x1, y1) = poly[i], poly[j]
            out.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
            out_labels.append(labels[i])
    return out, out_labels


def cell_of_origin(points, box_halfwidth):
    """Voronoi cell of the origin with respect to ``points`` plus the origin.

    Parameters
    ----------
    points : PlanarPalmSample or array of shape (n, 2)
        The other points; the origin itself must not be included.
    box_halfwidth : float
        Half-width of the initial square ``[-h, h]**2``.

    Returns
    -------
    CellPolygon
    """
    box_halfwidth = check_positive(box_halfwidth, "box_halfwidth")
    if isinstance(points, ppsampler.PlanarPalmSample):
        points = points.points
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    h = box_halfwidth
    poly = [(-h, -h), (h, -h), (h, h), (-h, h)]
    labels = [-1, -2, -3, -4]
    if len(pts):
        d2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        if np.any(d2 == 0):
            raise InvalidParameterError("the origin must not be among the points")
        # ascending distance, ties broken lexicographically
        order = np.lexsort((pts[:, 1], pts[:, 0], d2))
        max_r2 = 2.0 * h * h
        for idx in order:
            # a point farther than twice the circumradius cannot cut the cell
            if d2[idx] > 4.0 * max_r2:
                break
            poly, labels = _clip(poly, labels, pts[idx, 0], pts[idx, 1], int(idx))
            if not poly:
                break
            max_r2 = max(x * x + y * y for x, y in poly)
    bounded = bool(poly) and all(lab >= 0 for lab in labels)
    return CellPolygon(np.array(poly, dtype=float).reshape(-1, 2), bounded)


# --------------------------------------------------------------------------
# empirical circumscribed radius


@dataclass
class RadiusSample:
    """Palm samples of ``R(o)``; replicates whose cell touched the guard zone are discarded."""

    radii: np.ndarray
    model: object
    n_requested: int
    discarded: int = 0
    window_radius: float = math.nan

    @property
    def discard_rate(self):
        return self.discarded / self.n_requested if self.n_requested else 0.0

    def survival(self, r):
        """Empirical ``P0(R(o) > r)`` with 95% Wilson bounds, as ``(p, low, high)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        s = np.sort(self.radii)
        n = s.size
        exceed = n - np.searchsorted(s, r, side="right")
        lo, hi = wilson_interval(exceed, n)
        return exceed / n, lo, hi

    def running_mean_sq(self, checkpoints):
        """Running means of ``R(o)**2`` after the first ``n`` replicates."""
        sq = np.square(self.radii)
        return [float(sq[:n].mean()) for n in checkpoints]


def _radius_shard(model, window_radius):
    def run(size, rng):
        if isinstance(model, LatticeMix):
            return ppsampler.sample_lattice_palm(model.a, rng, size=size).circumradius, 0
        out = np.empty(size)
        kept = 0
        discarded = 0
        for _ in range(size):
            if isinstance(model, Poisson):
                sample = ppsampler.sample_poisson_planar_palm(model.intensity, window_radius, rng)
            else:
                sample = ppsampler.sample_ginibre_planar_palm(window_radius, rng)
            cell = cell_of_origin(sample, window_radius)
            radius = cell.circumradius
            # exact only if every possible cutting point lies inside the window
            if not cell.bounded or 2.0 * radius > window_radius:
                discarded += 1
                continue
            out[kept] = radius
            kept += 1
        return out[:kept], discarded

    return run


def default_window(model):
    """Window radius used for planar sampling (guard zone is its half)."""
    if isinstance(model, Poisson):
        return 6.0 / math.sqrt(model.intensity)
    if isinstance(model, Ginibre):
        return 6.0
    return math.nan


def circumscribed_radius_samples(model, n_samples, seed=0, window_radius=None, n_jobs=1, shard_size=2048,
                                 stream=(STREAM_RADIUS,)):
    """Palm samples of the circumscribed radius of the typical cell.

    Poisson uses Slivnyak's theorem (origin plus a Poisson sample in the
    window), Ginibre the planar Palm sampler, and the lattice model the
    exact ``R(o) = sqrt(1 + T**2) / 2`` for a Palm draw of ``T``.
    """
    model = check_model(model)
    n_samples = check_count(n_samples, "n_samples")
    seed = check_seed(seed)
    window = default_window(model) if window_radius is None else check_positive(window_radius, "window_radius")
    parts = map_shards(_radius_shard(model, window), n_samples, seed, stream, shard_size, n_jobs)
    radii = np.concatenate([p[0] for p in parts])
    discarded = int(sum(p[1] for p in parts))
    return RadiusSample(radii, model, n_samples, discarded, window)


# --------------------------------------------------------------------------
# bounds


@dataclass
class BoundCurve:
    """Upper bound on ``P0(R(o) > r)`` evaluated on a grid."""

    kind: str
    r: np.ndarray
    bound: np.ndarray
    valid: np.ndarray


def petal_area(r):
    """Area of one of the seven Foss-Zuyev petals of radius ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InvalidParameterError("petal radius must be >= 0")
    out = _PETAL_COEF * r * r
    return float(out) if out.ndim == 0 else out


def ginibre_petal_uv(r):
    """The two lower bounds ``(u(r), v(r))`` on the mean Palm count in a petal."""
    r2 = np.asarray(r, dtype=float) ** 2
    a = 4.0 * r2 * _COS_2PI7**2
    u = (a + np.exp(-a) - 1.0) / 7.0
    v = r2 * _PETAL_COEF / math.pi + np.expm1(-4.0 * r2 * _COS_PI7**2) / 7.0
    return u, v


def ginibre_petal_bound(r):
    """``min(1, 7 exp(-max(u(r), v(r))))`` for the Ginibre process."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise InvalidParameterError("r must be > 0")
    u, v = ginibre_petal_uv(r_arr)
    out = np.minimum(1.0, 7.0 * np.exp(-np.maximum(u, v)))
    return float(out) if out.ndim == 0 else out


def ginibre_petal_crossing(lo=0.1, hi=2.0, tol=1e-10):
    """Radius where ``u(r) = v(r)``, located by bisection."""
    f_lo = np.subtract(*ginibre_petal_uv(lo))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = np.subtract(*ginibre_petal_uv(mid))
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def calka_poisson_bound(intensity, r):
    """Calka's bound ``4 pi lam r**2 exp(-pi lam r**2)`` and its validity flag.

    The bound is stated for ``r >= 0.337`` at unit intensity; for other
    intensities validity is taken in the scaled radius ``r sqrt(lam)``.
    """
    lam = check_positive(intensity, "intensity")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise InvalidParameterError("r must be > 0")
    x = math.pi * lam * r_arr**2
    value = 4.0 * x * np.exp(-x)
    valid = r_arr * math.sqrt(lam) >= CALKA_R0
    if value.ndim == 0:
        return float(value), bool(valid)
    return value, valid


def generic_petal_bound(intensity, r):
    """Seven-petal bound for a weakly sub-Poisson determinantal process.

    ``min(1, 7 exp(-max(0, lam * petal_area(r) - 1)))``.
    """
    lam = check_positive(intensity, "intensity")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise InvalidParameterError("r must be > 0")
    out = np.minimum(1.0, 7.0 * np.exp(-np.maximum(0.0, lam * petal_area(r_arr) - 1.0)))
    return float(out) if out.ndim == 0 else out


def bound_curve(kind, r, intensity=None):
    """Evaluate one of the bounds (``calka``, ``ginibre-petal``, ``generic-petal``) on a grid."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if kind == "calka":
        value, valid = calka_poisson_bound(1.0 if intensity is None else intensity, r)
    elif kind == "ginibre-petal":
        value, valid = ginibre_petal_bound(r), np.ones(r.shape, dtype=bool)
    elif kind == "generic-petal":
        value = generic_petal_bound(1.0 / math.pi if intensity is None else intensity, r)
        valid = np.ones(r.shape, dtype=bool)
    else:
        raise InvalidParameterError(f"unknown bound kind {kind!r}")
    return BoundCurve(kind, r, np.atleast_1d(value), np.atleast_1d(valid))


@dataclass
class KernelL2Report:
    """``int_{D_R} |K(0, z)|**2 dz`` for the Ginibre kernel, closed form and quadrature."""

    window_radius: float
    closed_form: float
    quadrature: float

    @property
    def gap(self):
        return abs(self.closed_form - self.quadrature)

    @property
    def intensity_gap(self):
        """Distance of the closed form from ``K(0, 0) = 1/pi``."""
        return abs(1.0 / math.pi - self.closed_form)


def ginibre_kernel_l2(window_radius):
    """Squared kernel mass of the Ginibre kernel around the origin.

    ``|K(0, z)|**2 = exp(-|z|**2) / pi**2``, so the integral over ``D_R`` is
    ``(1 - exp(-R**2)) / pi``, tending to ``K(0, 0) = 1/pi``.
    """
    R = float(window_radius)
    if not R >= 0:
        raise InvalidParameterError("window radius must be >= 0")
    closed = -math.expm1(-R * R) / math.pi
    if R == 0:
        return KernelL2Report(R, 0.0, 0.0)
    quad, _ = integrate.dblquad(
        lambda r, phi: math.exp(-r * r) / math.pi**2 * r,
        0.0,
        2.0 * math.pi,
        0.0,
        R,
        epsabs=1e-14,
        epsrel=1e-13,
    )
    return KernelL2Report(R, closed, quad)


# --------------------------------------------------------------------------
# condition (A) diagnostics


@dataclass
class ConditionAReport:
    """Running Palm means of ``R(o)**2`` and ``|X_k|**2`` at increasing sample sizes."""

    model: object
    checkpoints: list
    radius_means: list
    distance_means: dict
    verdict: str
    analytic: str = ""
    discard_rate: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "checkpoints": list(self.checkpoints),
            "running_mean_R2": list(self.radius_means),
            "running_mean_Xk2": {str(k): v for k, v in self.distance_means.items()},
            "verdict": self.verdict,
            "analytic": self.analytic,
            "discard_rate": self.discard_rate,
        }


def growth_verdict(means, stable_tol=0.05, growth=0.25):
    """Classify a sequence of running means taken at sample sizes one decade apart."""
    ratios = [b / a for a, b in zip(means, means[1:])]
    if all(abs(q - 1.0) < stable_tol for q in ratios):
        return "stabilizing"
    if all(q > 1.0 + growth for q in ratios):
        return "diverging"
    return "inconclusive"


def _lattice_chain_means(a, n, checkpoints, n_chains, seed):
    rng = stream_rng(seed, STREAM_CONDITION_A, 2)
    means = np.empty((n_chains, len(checkpoints)))
    for c in range(n_chains):
        sq = np.square(ppsampler.sample_lattice_palm(a, rng, size=n).circumradius)
        csum = np.cumsum(sq)
        means[c] = [csum[k - 1] / k for k in checkpoints]
    return means


def condition_a_report(model, n_samples=None, seed=0, checkpoints=(10**3, 10**4, 10**5), ks=(1, 2, 5),
                       n_chains=None, n_jobs=1):
    """Empirical check of the second-moment condition on ``R(o)`` and ``|X_k|``.

    ``verdict`` is ``"stabilizing"`` when successive running means of
    ``R(o)**2`` differ by less than 5%, ``"diverging"`` when they grow by
    more than 25% per step, ``"inconclusive"`` otherwise.

    For the lattice model a single running mean of a heavy-tailed variable
    is driven by its few largest terms, so the verdict uses the median over
    ``n_chains`` independent chains (64 by default); the first chain is
    reported as ``radius_means``.  Other models use one chain.
    """
    model = check_model(model)
    checkpoints = sorted(int(c) for c in checkpoints)
    n = checkpoints[-1] if n_samples is None else check_count(n_samples, "n_samples")
    if n < checkpoints[-1]:
        raise InvalidParameterError("n_samples must cover the largest checkpoint")
    seed = check_seed(seed)
    details = {}
    distance_means = {}
    if isinstance(model, LatticeMix):
        n_chains = 64 if n_chains is None else check_count(n_chains, "n_chains")
        chains = _lattice_chain_means(model.a, n, checkpoints, n_chains, seed)
        cps = checkpoints
        radius_means = chains[0].tolist()
        verdict_means = np.median(chains, axis=0).tolist()
        details = {"n_chains": n_chains, "median_running_mean_R2": verdict_means}
        return ConditionAReport(model, cps, radius_means, distance_means, growth_verdict(verdict_means),
                                "E0[R(o)^2] = inf", 0.0, details)

    radius = circumscribed_radius_samples(model, n, seed, n_jobs=n_jobs, stream=(STREAM_CONDITION_A, 0))
    cps = [c for c in checkpoints if c <= radius.radii.size]
    radius_means = radius.running_mean_sq(cps)
    k_max = max(ks)

    def dist_shard(size, rng):
        if isinstance(model, Poisson):
            return ppsampler.poisson_radii_sq(model.intensity, k_max, size, rng)
        # the k nearest Kostlan radii lie among the first k + 60 indices
        # except with negligible probability
        return ppsampler.ginibre_radii_sq(k_max + 60, size, rng, palm=True)[:, :k_max]

    r2 = np.concatenate(map_shards(dist_shard, n, seed, (STREAM_CONDITION_A, 1), 8192, n_jobs))
    for k in ks:
        col = r2[:, k - 1]
        distance_means[k] = [float(col[:c].mean()) for c in checkpoints]
    verdict = growth_verdict(radius_means) if len(radius_means) > 1 else "inconclusive"
    return ConditionAReport(model, cps, radius_means, distance_means, verdict, "", radius.discard_rate, details)


@dataclass
class PalmIdentityReport:
    """Both sides of ``E0[f(T)] = E[f(T) / T] / lam`` for ``f(t) = 1 / (1 + t)``."""

    a: float
    quadrature: float
    monte_carlo: float
    std_error: float
    n_samples: int

    @property
    def n_se(self):
        return abs(self.monte_carlo - self.quadrature) / self.std_error

    def to_dict(self):
        return {
            "a": self.a,
            "palm_quadrature": self.quadrature,
            "stationary_mc": self.monte_carlo,
            "std_error": self.std_error,
            "n_se": self.n_se,
            "n_samples": self.n_samples,
        }


def lattice_palm_identity(a, n_samples=10**5, seed=0):
    """Check the Palm inversion for the lattice spacing with ``f(t) = 1/(1 + t)``.

    The left side integrates ``f`` against the Palm density ``a t**(-a-1)``;
    the right side averages ``f(T) / (lam T)`` over stationary draws of ``T``.
    """
    model = LatticeMix(a)
    n_samples = check_count(n_samples, "n_samples", minimum=2)
    seed = check_seed(seed)
    lhs, _ = integrate.quad(lambda t: model.a * t ** (-model.a - 1.0) / (1.0 + t), 1.0, math.inf,
                            epsabs=0.0, epsrel=1e-12)
    t = ppsampler.sample_lattice_stationary_T(model.a, stream_rng(seed, STREAM_CONDITION_A, 3), size=n_samples)
    vals = 1.0 / ((1.0 + t) * t * model.intensity)
    return PalmIdentityReport(model.a, lhs, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples)),
                              n_samples)
