"""Numerical model of stimulated emission of polarization-entangled photon pairs
in double-pass type-II down-conversion."""

from .errors import (
    ConfigError,
    ConvergenceFailure,
    CutoffExceeded,
    InvalidPattern,
    NotUnitary,
    OutOfValidity,
    SimulationError,
    UnsupportedState,
    ZeroProbabilityOutcome,
)
from .fock import ModeOccupation, StateVector, apply_ladder, fidelity, inner_product, vacuum
from .pdc import PdcParams, evolve_exact, pair_distribution, singlet_term, state_analytic

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceFailure",
    "CutoffExceeded",
    "InvalidPattern",
    "ModeOccupation",
    "NotUnitary",
    "OutOfValidity",
    "PdcParams",
    "SimulationError",
    "StateVector",
    "UnsupportedState",
    "ZeroProbabilityOutcome",
    "apply_ladder",
    "evolve_exact",
    "fidelity",
    "inner_product",
    "pair_distribution",
    "singlet_term",
    "state_analytic",
    "vacuum",
]
