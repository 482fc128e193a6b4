"""Exception hierarchy shared by all sirtail modules."""


class SirTailError(Exception):
    """Base class for errors raised by sirtail."""


class InvalidParameterError(SirTailError, ValueError):
    """A parameter is outside its admissible range."""


class ConditionViolatedError(SirTailError, ValueError):
    """A fading distribution fails the power-law Laplace decay condition."""


class NoInterfererError(InvalidParameterError):
    """The SIR needs at least one interfering base station (n_points >= 2)."""


class SamplerStallError(SirTailError, RuntimeError):
    """A rejection loop exceeded its proposal cap.

    Attributes
    ----------
    diagnostics : dict
        Sampler state at the time of the stall (mode count, accepted
        points, proposals used).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class QuadratureError(SirTailError, ArithmeticError):
    """A deterministic integral failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(SirTailError, ValueError):
    """An experiment configuration could not be parsed or validated."""
