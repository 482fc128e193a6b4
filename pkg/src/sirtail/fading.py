"""Propagation-effect distributions (fading and shadowing marks ``H``).

Two families are built in: the Dirac mass at one and the Gamma family,
which contains Rayleigh (``Gamma(1, 1)``) and Nakagami-m
(``Gamma(m, 1/m)``).  Other distributions can be added by subclassing
:class:`FadingSpec`; such a subclass must declare the power-law Laplace
decay parameters ``(alpha, c_H)`` explicitly through ``decay_params``.
"""

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy import special

from .exceptions import ConditionViolatedError, InvalidParameterError

# Laplace certificate grid, s in [1, 1e6].
_CERT_GRID = np.logspace(0.0, 6.0, 241)


class FadingSpec(ABC):
    """Distribution of the i.i.d. propagation effects ``H_i``."""

    kind = "abstract"

    @abstractmethod
    def laplace(self, s):
        """Laplace transform ``E[exp(-s H)]`` (vectorized)."""

    def laplace_deficit(self, s):
        """``1 - laplace(s)``, accurate for small ``s``."""
        return 1.0 - self.laplace(s)

    @property
    @abstractmethod
    def mean(self):
        """``E[H]``."""

    @property
    @abstractmethod
    def second_moment(self):
        """``E[H**2]``."""

    @abstractmethod
    def frac_moment(self, p):
        """``E[H**p]`` for ``0 < p <= 1``."""

    @abstractmethod
    def survival(self, x):
        """``P(H > x)`` (vectorized)."""

    @abstractmethod
    def sample(self, rng, size=None):
        """Draw i.i.d. marks."""

    @abstractmethod
    def decay_params(self):
        """Return ``(alpha, c_H)`` with ``laplace(s) <= c_H * s**-alpha`` for ``s >= 1``."""

    @abstractmethod
    def to_dict(self):
        """Serializable description, the inverse of :func:`parse_fading`."""


class Deterministic(FadingSpec):
    """No fading: ``H = 1`` almost surely."""

    kind = "deterministic"

    def __init__(self, value=1.0):
        if value != 1.0:
            raise InvalidParameterError("the deterministic fading spec is the unit mass; scale H through the model")
        self.value = 1.0

    def __repr__(self):
        return "Deterministic()"

    def __eq__(self, other):
        return isinstance(other, Deterministic)

    def __hash__(self):
        return hash(self.kind)

    def laplace(self, s):
        return np.exp(-np.asarray(s, dtype=float))

    def laplace_deficit(self, s):
        return -np.expm1(-np.asarray(s, dtype=float))

    @property
    def mean(self):
        return 1.0

    @property
    def second_moment(self):
        return 1.0

    def frac_moment(self, p):
        return 1.0

    def survival(self, x):
        return (np.asarray(x, dtype=float) < 1.0).astype(float)

    def sample(self, rng, size=None):
        if size is None:
            return 1.0
        return np.ones(size)

    def decay_params(self):
        # exp(-s) <= 1/s for every s > 0
        return 1.0, 1.0

    def to_dict(self):
        return {"kind": "deterministic"}


class GammaFading(FadingSpec):
    """Gamma distribution with shape ``shape`` and scale ``scale``.

    Its Laplace transform is ``(1 + scale*s)**-shape``.
    """

    kind = "gamma"

    def __init__(self, shape, scale=1.0):
        shape, scale = float(shape), float(scale)
        if not (math.isfinite(shape) and shape > 0):
            raise InvalidParameterError(f"gamma shape must be finite and > 0, got {shape!r}")
        if not (math.isfinite(scale) and scale > 0):
            raise InvalidParameterError(f"gamma scale must be finite and > 0, got {scale!r}")
        self.shape = shape
        self.scale = scale

    def __repr__(self):
        return f"GammaFading(shape={self.shape!r}, scale={self.scale!r})"

    def __eq__(self, other):
        return isinstance(other, GammaFading) and (self.shape, self.scale) == (other.shape, other.scale)

    def __hash__(self):
        return hash((self.kind, self.shape, self.scale))

    def laplace(self, s):
        s = np.asarray(s, dtype=float)
        return np.exp(-self.shape * np.log1p(self.scale * s))

    def laplace_deficit(self, s):
        s = np.asarray(s, dtype=float)
        return -np.expm1(-self.shape * np.log1p(self.scale * s))

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def second_moment(self):
        return self.shape * (self.shape + 1.0) * self.scale**2

    def frac_moment(self, p):
        return math.exp(special.gammaln(self.shape + p) - special.gammaln(self.shape) + p * math.log(self.scale))

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return special.gammaincc(self.shape, np.maximum(x, 0.0) / self.scale)

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size=size)

    def decay_params(self):
        return self.shape, self.scale ** (-self.shape)

    def to_dict(self):
        return {"kind": "gamma", "shape": self.shape, "scale": self.scale}


def rayleigh():
    """Rayleigh fading, ``H ~ Exp(1)``."""
    return GammaFading(1.0, 1.0)


def nakagami(m):
    """Nakagami-m fading without shadowing, ``H ~ Gamma(m, 1/m)``."""
    m = float(m)
    if not (math.isfinite(m) and m > 0):
        raise InvalidParameterError(f"Nakagami parameter m must be > 0, got {m!r}")
    return GammaFading(m, 1.0 / m)


def parse_fading(value):
    """Build a fading spec from a spec, a dict or a string.

    Accepted strings are ``rayleigh``, ``deterministic`` (or ``delta``),
    ``nakagami:M`` and ``gamma:SHAPE,SCALE``.  Dicts follow the config
    file layout, e.g. ``{"kind": "nakagami", "m": 2.0}``.
    """
    if isinstance(value, FadingSpec):
        return value
    if isinstance(value, dict):
        params = dict(value)
        kind = str(params.pop("kind", "")).lower()
        try:
            if kind == "rayleigh":
                spec = rayleigh()
            elif kind in ("deterministic", "delta", "none"):
                spec = Deterministic()
            elif kind == "nakagami":
                spec = nakagami(params.pop("m"))
            elif kind == "gamma":
                spec = GammaFading(params.pop("shape"), params.pop("scale", 1.0))
            else:
                raise InvalidParameterError(f"unknown fading kind {kind!r}")
        except KeyError as exc:
            raise InvalidParameterError(f"fading {kind!r} is missing field {exc.args[0]!r}") from None
        if params:
            raise InvalidParameterError(f"unknown fading fields: {sorted(params)}")
        return spec
    if isinstance(value, str):
        kind, _, rest = value.strip().partition(":")
        kind = kind.lower()
        args = [a for a in rest.split(",") if a.strip()]
        try:
            if kind == "rayleigh" and not args:
                return rayleigh()
            if kind in ("deterministic", "delta", "none") and not args:
                return Deterministic()
            if kind == "nakagami" and len(args) == 1:
                return nakagami(float(args[0]))
            if kind == "gamma" and len(args) in (1, 2):
                return GammaFading(*map(float, args))
        except ValueError as exc:
            if isinstance(exc, InvalidParameterError):
                raise
            raise InvalidParameterError(f"bad fading parameter in {value!r}") from exc
        raise InvalidParameterError(f"cannot interpret {value!r} as a fading spec")
    raise InvalidParameterError(f"cannot interpret {value!r} as a fading spec")


def laplace(spec, s):
    """Laplace transform of ``H`` at ``s >= 0``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(np.isnan(s_arr)):
        raise InvalidParameterError("the Laplace transform is evaluated at s >= 0 only")
    out = spec.laplace(s_arr)
    return float(out) if np.ndim(out) == 0 else out


def frac_moment(spec, p):
    """``E[H**p]`` for ``0 < p <= 1`` (exact)."""
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise InvalidParameterError(f"fractional moment order must lie in (0, 1], got {p!r}")
    return float(spec.frac_moment(p))


def condition_b_params(spec, beta):
    """Certified ``(alpha, c_H)`` such that ``laplace(s) <= c_H s**-alpha`` for ``s >= 1``.

    The declared pair is checked on a log-spaced grid of ``s`` in
    ``[1, 1e6]`` together with finiteness of ``E[H**(1/beta)]``.

    Raises
    ------
    ConditionViolatedError
        If the certificate fails, e.g. for a distribution with an atom at
        zero.
    """
    beta = float(beta)
    if not beta > 1.0:
        raise InvalidParameterError(f"beta must be > 1, got {beta!r}")
    alpha, c_h = spec.decay_params()
    if not (alpha > 0 and c_h > 0):
        raise ConditionViolatedError(f"{spec!r}: decay parameters must be positive, got ({alpha}, {c_h})")
    lhs = spec.laplace(_CERT_GRID)
    rhs = c_h * _CERT_GRID ** (-alpha)
    if np.any(lhs > rhs * (1.0 + 1e-12)):
        worst = float(_CERT_GRID[np.argmax(lhs / rhs)])
        raise ConditionViolatedError(
            f"{spec!r}: Laplace transform exceeds {c_h:g} s^-{alpha:g} at s = {worst:g}"
        )
    moment = spec.frac_moment(1.0 / beta)
    if not math.isfinite(moment):
        raise ConditionViolatedError(f"{spec!r}: E[H^(1/beta)] is not finite")
    return float(alpha), float(c_h)


def sample(spec, rng, size=None):
    """I.i.d. draws from ``spec`` using the generator ``rng``."""
    return spec.sample(rng, size=size)
