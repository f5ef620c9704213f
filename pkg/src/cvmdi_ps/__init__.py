"""Key-rate numerics for relay-based coherent-state CV QKD with virtual photon subtraction.

Layering, bottom up: ``gaussian`` (two-mode covariance algebra),
``subtraction`` (post-selected source closed forms), ``protocol``
(relay + displacement reduced to one effective channel), ``keyrate``
(mutual information, Holevo bound, final rate, PLOB reference),
``optimize`` (transmittance/noise/distance searches), ``montecarlo``
(sampling cross-check of the closed forms), ``cli`` (front end).
"""

from .errors import (
    DegenerateGeometry,
    DegenerateSource,
    DomainError,
    InsufficientAcceptance,
    NonPhysicalState,
    NoPositiveRate,
)
from .gaussian import (
    SymplecticSpectrum,
    TwoModeCovariance,
    entropy_g,
    heterodyne_condition_single,
    symplectic_eigenvalues,
    tmsv_covariance,
    von_neumann_entropy,
)
from .keyrate import KeyRateBreakdown, holevo_bound, key_rate, mutual_information, plob_bound
from .montecarlo import McConfig, McReport, run_equivalence_check
from .optimize import (
    Geometry,
    OptimumReport,
    RatePoint,
    Scenario,
    Scheme,
    SweepResult,
    max_distance,
    optimal_tps,
    rate_at,
    rate_fixed,
    tolerable_excess_noise,
)
from .protocol import (
    AttackKind,
    AttackModel,
    EquivalentChannel,
    LinkParams,
    end_to_end_covariance,
    equivalent_channel,
    eve_correlation_noise,
    minimal_excess_noise,
    optimal_mu,
)
from .subtraction import (
    ModulationSample,
    SourceParams,
    selection_probability,
    subtracted_covariance,
    success_probability,
)

__version__ = "0.1.0"
