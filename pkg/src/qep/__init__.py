"""Two qubits with a swap coupling and unequal decay: closed-form X-state
dynamics, a brute-force Lindblad oracle, exceptional-point spectra and
concurrence extremum search.

All quantities use rescaled units: ``tau = 2 J t``, ``gamma = (g1 + g2) / 4J``,
``kappa = (g2 - g1) / 4J``.
"""

from .analytic import propagate, propagate_mixed
from .core import (
    EXCITED_01,
    EXCITED_10,
    EXCITED_11,
    ConstraintViolation,
    InitialCondition,
    InvalidState,
    Params,
    XState,
    initial_xstate,
    make_params,
    mix,
)
from .entanglement import concurrence_x, first_max_10, first_max_11

__version__ = "0.1.0"

__all__ = [
    "EXCITED_01",
    "EXCITED_10",
    "EXCITED_11",
    "ConstraintViolation",
    "InitialCondition",
    "InvalidState",
    "Params",
    "XState",
    "concurrence_x",
    "first_max_10",
    "first_max_11",
    "initial_xstate",
    "make_params",
    "mix",
    "propagate",
    "propagate_mixed",
]
