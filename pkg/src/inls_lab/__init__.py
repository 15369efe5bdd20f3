"""Numerical laboratory for the inhomogeneous nonlinear Schrodinger equation

    i u_t + Laplace(u) + |x|^{-b} |u|^{p-1} u = 0

on radially symmetric data: ground states of the associated elliptic
equation, threshold classification of initial data, Strang-split time
evolution with blow-up detection, local virial diagnostics, and the
post-processing behind the blow-up rate lower bound.
"""

__version__ = "0.1.0"

from .dichotomy import (
    DichotomyVerdict,
    OdeMechanismReport,
    RateReport,
    classify,
    compute_criticality,
    ode_mechanism_check,
    rate_report,
)
from .errors import (
    BlowupSignalError,
    ConfigError,
    ConstructionError,
    ConvergenceError,
    DomainError,
    InlsLabError,
    InsufficientDataError,
    RegimeError,
    ResolutionError,
    SolverError,
    ValidationError,
)
from .evolution import (
    BLOWUP_DETECTED,
    COMPLETED_HORIZON,
    NUMERICAL_FAILURE,
    STEP_UNDERFLOW,
    EvolutionConfig,
    RunOutcome,
    evolve,
    step,
)
from .fields import FieldState, RadialGrid, gaussian_field
from .functionals import (
    K_functional,
    apply_scaling,
    energy,
    gradient_norm_sq,
    mass,
    weighted_potential,
)
from .ground_state import (
    GroundState,
    SolverOptions,
    elliptic_residual,
    load_profile,
    save_profile,
    solve_ground_state,
    threshold_quantities,
)
from .model import ModelParams
from .records import TimeSeriesRecord, read_series, write_series
from .virial import (
    CERTIFIED_QUARTIC_CONSTANT,
    BoundsReport,
    CutoffProfile,
    VirialMonitor,
    VirialReport,
    build_cutoff,
    decompose_remainders,
    local_virial_I,
    local_virial_Idoubleprime_direct,
    local_virial_Iprime,
    remainder_bounds_check,
)

__all__ = [
    "__version__",
    "BLOWUP_DETECTED",
    "COMPLETED_HORIZON",
    "NUMERICAL_FAILURE",
    "STEP_UNDERFLOW",
    "CERTIFIED_QUARTIC_CONSTANT",
    "BlowupSignalError",
    "BoundsReport",
    "ConfigError",
    "ConstructionError",
    "ConvergenceError",
    "CutoffProfile",
    "DichotomyVerdict",
    "DomainError",
    "EvolutionConfig",
    "FieldState",
    "GroundState",
    "InlsLabError",
    "InsufficientDataError",
    "K_functional",
    "ModelParams",
    "OdeMechanismReport",
    "RadialGrid",
    "RateReport",
    "RegimeError",
    "ResolutionError",
    "RunOutcome",
    "SolverError",
    "SolverOptions",
    "TimeSeriesRecord",
    "ValidationError",
    "VirialMonitor",
    "VirialReport",
    "apply_scaling",
    "build_cutoff",
    "classify",
    "compute_criticality",
    "decompose_remainders",
    "elliptic_residual",
    "energy",
    "evolve",
    "gaussian_field",
    "gradient_norm_sq",
    "load_profile",
    "local_virial_I",
    "local_virial_Idoubleprime_direct",
    "local_virial_Iprime",
    "mass",
    "ode_mechanism_check",
    "rate_report",
    "read_series",
    "remainder_bounds_check",
    "save_profile",
    "solve_ground_state",
    "step",
    "threshold_quantities",
    "weighted_potential",
    "write_series",
]
