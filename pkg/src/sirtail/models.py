"""Base-station point process models."""

import math
from dataclasses import dataclass
from typing import Union

from .exceptions import InvalidParameterError


@dataclass(frozen=True)
class Poisson:
    """Homogeneous Poisson process with ``intensity`` points per unit area."""

    intensity: float = 1.0

    def __post_init__(self):
        lam = float(self.intensity)
        if not (math.isfinite(lam) and lam > 0):
            raise InvalidParameterError(f"Poisson intensity must be finite and > 0, got {self.intensity!r}")
        object.__setattr__(self, "intensity", lam)

    name = "poisson"

    def to_dict(self):
        return {"kind": "poisson", "intensity": self.intensity}


@dataclass(frozen=True)
class Ginibre:
    """Ginibre determinantal process; its intensity is fixed at 1/pi."""

    name = "ginibre"

    @property
    def intensity(self):
        return 1.0 / math.pi

    def to_dict(self):
        return {"kind": "ginibre"}


@dataclass(frozen=True)
class LatticeMix:
    """Randomly shifted lattice ``(Z x T Z) + U`` with Pareto-type spacing ``T``.

    ``T`` has density ``(a - 1) t**-a`` on ``[1, inf)`` with ``1 < a < 2``.
    """

    a: float = 1.5

    name = "lattice"

    def __post_init__(self):
        a = float(self.a)
        if not 1.0 < a < 2.0:
            raise InvalidParameterError(f"lattice shape a must lie in (1, 2), got {self.a!r}")
        object.__setattr__(self, "a", a)

    @property
    def intensity(self):
        return (self.a - 1.0) / self.a

    def to_dict(self):
        return {"kind": "lattice", "a": self.a}


ProcessModel = Union[Poisson, Ginibre, LatticeMix]


def parse_model(value):
    """Build a process model from a model object, a dict or a ``kind[:param]`` string.

    >>> parse_model("poisson:4")
    Poisson(intensity=4.0)
    >>> parse_model({"kind": "lattice", "a": 1.5})
    LatticeMix(a=1.5)
    """
    if isinstance(value, (Poisson, Ginibre, LatticeMix)):
        return value
    if isinstance(value, dict):
        params = dict(value)
        kind = str(params.pop("kind", "")).lower()
        arg = params.pop("intensity", params.pop("lambda", params.pop("a", None)))
        if params:
            raise InvalidParameterError(f"unknown model fields: {sorted(params)}")
    elif isinstance(value, str):
        kind, _, rest = value.strip().partition(":")
        kind = kind.lower()
        arg = rest or None
    else:
        raise InvalidParameterError(f"cannot interpret {value!r} as a point process model")

    try:
        if kind == "poisson":
            return Poisson(1.0 if arg is None else float(arg))
        if kind == "ginibre":
            if arg is not None:
                raise InvalidParameterError("the Ginibre model takes no parameter")
            return Ginibre()
        if kind in ("lattice", "latticemix", "lattice-mix"):
            return LatticeMix(1.5 if arg is None else float(arg))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParameterError):
            raise
        raise InvalidParameterError(f"bad model parameter in {value!r}: {exc}") from exc
    raise InvalidParameterError(f"unknown point process model {kind!r}")
