"""Simulation and verification toolkit for dither-based extremum-seeking control."""

from .averaging import (
    QuadratureSpec,
    averaged_field,
    averaged_main,
    averaged_rhs,
    effective_disturbance,
    phi_batch,
    remainder_deltaG,
    remainder_deltag,
)
from .controller import (
    Constant,
    DisturbanceSpec,
    EsParams,
    Modulated,
    Sampled,
    SquareWave,
    Zero,
    closed_loop_field,
    closed_loop_rhs,
    es_control,
    filter_rhs,
)
from .errors import (
    BlowUp,
    ConfigError,
    DimensionMismatch,
    EscLabError,
    GridMismatch,
    NonFiniteValue,
    QuadratureNotConverged,
    ReportFailure,
    UnknownOptimum,
    UnsupportedPlant,
    ValidationFailure,
)
from .plants import (
    Objective,
    Plant,
    integrator_plant,
    quadratic_objective,
    source_objective,
    unicycle_plant,
)
from .pullback import CoordinateMap, pullback_field, tilde_rhs
from .signals import DitherSpec, SampledDither, iterated_integral_Uv, validate_assumptions
from .solver import Trajectory, default_step, integrate

__version__ = "0.1.0"
