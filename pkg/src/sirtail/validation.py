"""Input validation helpers used by the estimators and engines."""

import math
import numbers

import numpy as np

from .exceptions import InvalidParameterError, NoInterfererError
from .fading import FadingSpec, parse_fading
from .models import parse_model

# below this the residual interference integral r**(2 - 2 beta) / (beta - 1)
# is too large for a finite truncation to be trusted
MIN_SIMULATION_BETA = 1.05


def check_beta(beta, *, simulation=False):
    """Return ``beta`` as float after checking ``beta > 1``.

    With ``simulation=True`` values ``beta <= 1.05`` are rejected too.
    """
    try:
        beta = float(beta)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"beta must be a real number, got {beta!r}") from None
    if not (math.isfinite(beta) and beta > 1.0):
        raise InvalidParameterError(f"beta must be finite and > 1, got {beta!r}")
    if simulation and beta <= MIN_SIMULATION_BETA:
        raise InvalidParameterError(
            f"beta = {beta} is too close to 1 for truncated simulation (need beta > {MIN_SIMULATION_BETA})"
        )
    return beta


def check_positive(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")
    return value


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise InvalidParameterError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_n_points(n_points):
    n_points = check_count(n_points, "n_points", minimum=1)
    if n_points < 2:
        raise NoInterfererError("at least one interferer is needed: n_points must be >= 2")
    return n_points


def check_seed(seed):
    if seed is None:
        raise InvalidParameterError("a seed is required; results must be reproducible")
    return check_count(seed, "seed", minimum=0)


def check_theta_grid(theta):
    """Validate a positive, strictly ascending 1-D grid of SIR thresholds."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 2 and 1 in theta.shape:
        theta = theta.ravel()
    if theta.ndim != 1 or theta.size == 0:
        raise InvalidParameterError("theta grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(theta)) or np.any(theta <= 0):
        raise InvalidParameterError("theta values must be finite and > 0")
    if np.any(np.diff(theta) <= 0):
        raise InvalidParameterError("theta grid must be strictly ascending")
    return theta


def check_model(model):
    return parse_model(model)


def check_fading(fading):
    spec = parse_fading(fading)
    if not isinstance(spec, FadingSpec):
        raise InvalidParameterError(f"not a fading spec: {fading!r}")
    return spec
