"""Tail asymptotics of the downlink SIR in cellular networks.

Monte Carlo estimation of ``P(SIR > theta)`` for Poisson, Ginibre and
mixed-lattice base-station processes, deterministic evaluation of the
limit ``theta**(1/beta) P(SIR > theta)``, and tail bounds for the
circumscribed radius of the typical Voronoi cell.
"""

from .asymquad import (
    QuadConfig,
    ginibre_constant,
    ginibre_nakagami_constant,
    h_integral_identity_check,
    jensen_lower_bound,
    poisson_constant,
)
from .exceptions import (
    ConditionViolatedError,
    ConfigError,
    InvalidParameterError,
    NoInterfererError,
    QuadratureError,
    SamplerStallError,
    SirTailError,
)
from .fading import Deterministic, FadingSpec, GammaFading, nakagami, parse_fading, rayleigh
from .models import Ginibre, LatticeMix, Poisson, parse_model
from .sirmc import (
    ConstantEstimate,
    PalmConstantEstimator,
    SIRTailEstimator,
    TailCurve,
    estimate_palm_constant,
    estimate_sir_tail,
)
from .voronoi import (
    CellPolygon,
    calka_poisson_bound,
    cell_of_origin,
    circumscribed_radius_samples,
    condition_a_report,
    generic_petal_bound,
    ginibre_kernel_l2,
    ginibre_petal_bound,
    petal_area,
)

__version__ = "0.1.0"
