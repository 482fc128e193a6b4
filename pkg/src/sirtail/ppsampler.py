"""Samplers for the base-station point processes.

Radii samplers return the ordered distances ``|X_1| < |X_2| < ...`` seen
from the origin; under the Palm distribution the atom at the origin is
never stored.  Poisson radii are the same under both laws (Slivnyak).
Ginibre radii use Kostlan's decomposition: the squared moduli are
independent ``Gamma(i, 1)`` draws (stationary) or ``Gamma(i + 1, 1)``
draws (reduced Palm), ``i = 1, 2, ...``.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .exceptions import InvalidParameterError, SamplerStallError
from .models import Ginibre, LatticeMix, Poisson
from .validation import check_count, check_positive


@dataclass
class RadiiSample:
    """Ascending finite prefix of base-station distances from the origin.

    ``residual_rate`` is the expected number of points per unit area
    beyond the last stored radius, used for truncation corrections.
    """

    radii: np.ndarray
    model: object
    palm: bool
    residual_rate: float

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        if radii.ndim != 1 or radii.size == 0:
            raise InvalidParameterError("radii must be a non-empty 1-D array")
        if radii[0] <= 0 or np.any(np.diff(radii) <= 0):
            raise InvalidParameterError("radii must be strictly increasing and positive")
        self.radii = radii

    def __len__(self):
        return self.radii.size


@dataclass
class PlanarPalmSample:
    """Points of a reduced-Palm sample inside the disk of radius ``window_radius``."""

    points: np.ndarray
    window_radius: float
    model: object
    dropped_mass: float = 0.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.points)


@dataclass
class LatticePalmDraw:
    """Palm draw of the lattice spacing ``T`` (scalar or array)."""

    T: object
    a: float

    @property
    def circumradius(self):
        """Exact circumscribed radius of the typical cell, ``sqrt(1 + T**2) / 2``."""
        return np.sqrt(1.0 + np.square(self.T)) / 2.0


# --------------------------------------------------------------------------
# batch radii (rows are independent replicates)


def poisson_radii_sq(intensity, n_points, size, rng):
    """Squared radii of the first ``n_points`` Poisson points, shape ``(size, n_points)``."""
    e = rng.standard_exponential((size, n_points))
    return np.cumsum(e, axis=1) / (intensity * math.pi)


def ginibre_radii_sq(n_points, size, rng, palm=True, sort=True):
    """Kostlan squared radii, shape ``(size, n_points)``.

    Column ``i - 1`` holds a ``Gamma(i + 1, 1)`` draw (Palm) or a
    ``Gamma(i, 1)`` draw (stationary) before sorting.
    """
    shapes = np.arange(1, n_points + 1, dtype=float) + (1.0 if palm else 0.0)
    y = rng.standard_gamma(np.broadcast_to(shapes, (size, n_points)))
    if sort:
        y.sort(axis=1)
    return y


def sample_poisson_radii(intensity, n_points, rng):
    """Ordered distances of the nearest ``n_points`` points of a Poisson process.

    ``r_i**2 = (E_1 + ... + E_i) / (intensity * pi)`` with ``E_j`` standard
    exponential.  The law is the same under the reduced Palm distribution.
    """
    intensity = check_positive(intensity, "intensity")
    n_points = check_count(n_points, "n_points")
    r2 = poisson_radii_sq(intensity, n_points, 1, rng)[0]
    return RadiiSample(np.sqrt(r2), Poisson(intensity), palm=True, residual_rate=intensity)


def sample_ginibre_radii(palm, n_points, rng):
    """Ordered Ginibre distances via Kostlan's independent Gamma radii."""
    n_points = check_count(n_points, "n_points")
    r2 = ginibre_radii_sq(n_points, 1, rng, palm=bool(palm))[0]
    return RadiiSample(np.sqrt(r2), Ginibre(), palm=bool(palm), residual_rate=1.0 / math.pi)


def sample_lattice_palm(a, rng, size=None):
    """Palm draw of the spacing ``T`` of the shifted lattice.

    Under the Palm law ``T`` is Pareto with ``P0(T > t) = t**-a`` for
    ``t >= 1``; it is drawn by inverse CDF ``T = U**(-1/a)``.
    """
    a = LatticeMix(a).a
    u = 1.0 - rng.random(size)  # in (0, 1]
    return LatticePalmDraw(T=u ** (-1.0 / a), a=a)


def sample_lattice_stationary_T(a, rng, size=None):
    """Stationary draw of the lattice spacing, density ``(a - 1) t**-a`` on ``t >= 1``."""
    a = LatticeMix(a).a
    u = 1.0 - rng.random(size)
    return u ** (-1.0 / (a - 1.0))


def sample_poisson_planar_palm(intensity, window_radius, rng):
    """Reduced-Palm Poisson sample on the disk ``D_R`` (origin not stored)."""
    intensity = check_positive(intensity, "intensity")
    window_radius = check_positive(window_radius, "window_radius")
    n = rng.poisson(intensity * math.pi * window_radius**2)
    r = window_radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    pts = np.column_stack((r * np.cos(phi), r * np.sin(phi)))
    return PlanarPalmSample(pts, window_radius, Poisson(intensity))


# --------------------------------------------------------------------------
# Palm Ginibre on a disk: determinantal projection sampling


@dataclass(frozen=True)
class GinibreDiskModes:
    """Spectral data of the Palm Ginibre kernel restricted to ``D_R``.

    The restricted kernel has eigenfunctions proportional to
    ``z**k exp(-|z|**2 / 2)``, ``k >= 1``, with eigenvalues
    ``kappa_k = P(Gamma(k + 1, 1) <= R**2)``.
    """

    window_radius: float
    eig_cutoff: float
    k: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    log_norm: np.ndarray = field(repr=False)
    dropped_mass: float = 0.0

    @property
    def expected_count(self):
        return float(self.kappa.sum())


@lru_cache(maxsize=32)
def ginibre_disk_modes(window_radius, eig_cutoff=1e-12):
    """Eigen-decomposition of the Palm Ginibre kernel on the disk (cached)."""
    R2 = float(window_radius) ** 2
    k_hi = int(math.ceil(R2) + math.ceil(10.0 * math.sqrt(R2))) + 10
    k = np.arange(1, k_hi + 1, dtype=float)
    kappa = special.gammainc(k + 1.0, R2)
    keep = kappa >= eig_cutoff
    dropped = float(kappa[~keep].sum())
    k, kappa = k[keep], kappa[keep]
    # psi_k(z) = z**k exp(-|z|**2/2) / sqrt(pi * k! * kappa_k) is orthonormal on D_R
    log_norm = 0.5 * (math.log(math.pi) + special.gammaln(k + 1.0) + np.log(kappa))
    return GinibreDiskModes(float(window_radius), float(eig_cutoff), k, kappa, log_norm, dropped)


def sample_ginibre_planar_palm(window_radius, rng, eig_cutoff=1e-12, max_proposals=10**6):
    """Exact reduced-Palm Ginibre sample restricted to the disk ``D_R``.

    Two-phase determinantal sampling: each eigenmode is kept with
    probability ``kappa_k``; the points of the resulting projection
    process are then drawn one at a time.  Each proposal picks a kept mode
    uniformly and draws from its radial density (a Gamma law truncated to
    ``[0, R**2]``) with a uniform angle, and is accepted with the fraction
    of its feature vector lying outside the span of the points already
    placed.

    Raises
    ------
    SamplerStallError
        If a single point needs more than ``max_proposals`` proposals.
    """
    window_radius = check_positive(window_radius, "window_radius")
    if not 0.0 < eig_cutoff < 1.0:
        raise InvalidParameterError(f"eig_cutoff must lie in (0, 1), got {eig_cutoff!r}")
    modes = ginibre_disk_modes(window_radius, eig_cutoff)
    R2 = window_radius**2

    chosen = rng.random(modes.k.size) < modes.kappa
    k = modes.k[chosen]
    log_norm = modes.log_norm[chosen]
    kappa = modes.kappa[chosen]
    n = k.size
    if n == 0:
        return PlanarPalmSample(np.empty((0, 2)), window_radius, Ginibre(), modes.dropped_mass)

    basis = np.zeros((n, n), dtype=complex)
    points = np.empty((n, 2))
    for j in range(n):
        batch = min(256, max(4, (2 * n) // (n - j)))
        used = 0
        while True:
            if used >= max_proposals:
                raise SamplerStallError(
                    "Ginibre projection sampler exceeded its proposal cap",
                    {"modes": n, "placed": j, "proposals": used, "window_radius": window_radius},
                )
            idx = rng.integers(n, size=batch)
            x = special.gammaincinv(k[idx] + 1.0, rng.random(batch) * kappa[idx])
            phi = 2.0 * math.pi * rng.random(batch)
            u = rng.random(batch)
            used += batch
            with np.errstate(divide="ignore"):
                log_mag = 0.5 * np.log(x)[:, None] * k[None, :] - 0.5 * x[:, None] - log_norm[None, :]
            v = np.exp(log_mag) * np.exp(-1j * phi[:, None] * k[None, :])
            total = np.einsum("ij,ij->i", v, v.conj()).real
            if j:
                coef = v @ basis[:j].conj().T
                resid = total - np.einsum("ij,ij->i", coef, coef.conj()).real
            else:
                coef = None
                resid = total
            with np.errstate(invalid="ignore", divide="ignore"):
                ok = (total > 0) & (u * total < resid)
            hits = np.flatnonzero(ok)
            if hits.size:
                h = hits[0]
                w = v[h] - (coef[h] @ basis[:j] if j else 0.0)
                basis[j] = w / np.linalg.norm(w)
                r = math.sqrt(x[h])
                points[j] = (r * math.cos(phi[h]), r * math.sin(phi[h]))
                break
    return PlanarPalmSample(points, window_radius, Ginibre(), modes.dropped_mass)
