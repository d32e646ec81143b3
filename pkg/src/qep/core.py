"""Domain types shared by the whole package.

Everything is expressed in rescaled units: time ``tau = 2 J t``, total decay
``gamma = (g1 + g2) / 4J`` and disparity ``kappa = (g2 - g1) / 4J``.

Basis ordering is |11>, |10>, |01>, |00> (first label = first qubit), so the
X state reads::

    [[a, 0, 0, h],
     [0, b, m, 0],
     [0, m*, c, 0],
     [h*, 0, 0, d]]
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

TRACE_TOL = 1e-12
POPULATION_TOL = 1e-12
PSD_TOL = 1e-10


class ConstraintViolation(ValueError):
    """Rescaled rates violate ``|kappa| <= gamma`` or ``gamma >= 0``."""


class InvalidState(ValueError):
    """An X state that is not a density matrix."""


@dataclass(frozen=True)
class Params:
    gamma: float
    kappa: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and math.isfinite(self.kappa)):
            raise ConstraintViolation(f"non-finite parameters gamma={self.gamma}, kappa={self.kappa}")
        if self.gamma < 0:
            raise ConstraintViolation(f"gamma must be >= 0, got {self.gamma}")
        if abs(self.kappa) > self.gamma + 1e-12:
            raise ConstraintViolation(
                f"|kappa| <= gamma required (decay rates are non-negative), got gamma={self.gamma}, kappa={self.kappa}"
            )

    @property
    def delta_sq(self) -> float:
        """Signed discriminant ``kappa**2 - 1``; negative means underdamped."""
        return self.kappa * self.kappa - 1.0

    def raw_rates(self, coupling: float = 1.0) -> tuple[float, float]:
        """Decay rates (g1, g2) of the first and second qubit for a coupling ``J``."""
        return 2.0 * coupling * (self.gamma - self.kappa), 2.0 * coupling * (self.gamma + self.kappa)

    def reflected(self) -> "Params":
        """Parameters with the two qubits' decay rates exchanged."""
        return Params(self.gamma, -self.kappa)


def make_params(gamma: float, kappa: float) -> Params:
    return Params(float(gamma), float(kappa))


def params_from_rates(g1: float, g2: float, coupling: float) -> Params:
    """Convert physical decay rates and swap coupling ``J`` to rescaled parameters."""
    if coupling <= 0:
        raise ConstraintViolation("coupling J must be positive")
    return make_params((g1 + g2) / (4.0 * coupling), (g2 - g1) / (4.0 * coupling))


def tau_from_time(t: float, coupling: float) -> float:
    return 2.0 * coupling * t


@dataclass(frozen=True)
class XState:
    a: float
    b: float
    c: float
    d: float
    h: complex = 0j
    m: complex = 0j

    def __post_init__(self):
        pops = (self.a, self.b, self.c, self.d)
        if abs(sum(pops) - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace {sum(pops)!r} != 1")
        if min(pops) < -POPULATION_TOL:
            raise InvalidState(f"negative population in {pops}")
        if self.min_eigenvalue() < -PSD_TOL:
            raise InvalidState(f"not positive semidefinite: min eigenvalue {self.min_eigenvalue():.3e}")

    @property
    def x(self) -> float:
        return self.b + self.c

    @property
    def y(self) -> float:
        return self.b - self.c

    @property
    def z(self) -> complex:
        # purely imaginary by construction
        return complex(0.0, 2.0 * complex(self.m).imag)

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue, from the two decoupled 2x2 blocks."""

        def block_min(p, q, off):
            return 0.5 * (p + q) - math.hypot(0.5 * (p - q), abs(off))

        return min(block_min(self.a, self.d, self.h), block_min(self.b, self.c, self.m))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.h, self.m], dtype=complex)


class InitKind(enum.Enum):
    EXCITED_10 = "10"
    EXCITED_01 = "01"
    EXCITED_11 = "11"
    MIX = "mix"


@dataclass(frozen=True)
class InitialCondition:
    """Named initial state; ``MIX`` is ``alpha |10><10| + (1 - alpha) |11><11|``."""

    kind: InitKind
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind is InitKind.MIX and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    @classmethod
    def parse(cls, tag: str, alpha: float = 1.0) -> "InitialCondition":
        return cls(InitKind(tag), alpha)

    @property
    def weight_10(self) -> float:
        """Weight of |10><10| in the state (1 for EXCITED_10, alpha for MIX)."""
        return {InitKind.EXCITED_10: 1.0, InitKind.EXCITED_01: 0.0, InitKind.EXCITED_11: 0.0}.get(self.kind, self.alpha)


EXCITED_10 = InitialCondition(InitKind.EXCITED_10)
EXCITED_01 = InitialCondition(InitKind.EXCITED_01)
EXCITED_11 = InitialCondition(InitKind.EXCITED_11)


def mix(alpha: float) -> InitialCondition:
    return InitialCondition(InitKind.MIX, float(alpha))


def initial_xstate(ic: InitialCondition) -> XState:
    if ic.kind is InitKind.EXCITED_10:
        return XState(0.0, 1.0, 0.0, 0.0)
    if ic.kind is InitKind.EXCITED_01:
        return XState(0.0, 0.0, 1.0, 0.0)
    if ic.kind is InitKind.EXCITED_11:
        return XState(1.0, 0.0, 0.0, 0.0)
    return XState(1.0 - ic.alpha, ic.alpha, 0.0, 0.0)


def xstate_to_density(s: XState) -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0], rho[1, 1], rho[2, 2], rho[3, 3] = s.a, s.b, s.c, s.d
    rho[0, 3], rho[3, 0] = s.h, np.conj(s.h)
    rho[1, 2], rho[2, 1] = s.m, np.conj(s.m)
    return rho


def density_to_xstate(rho: np.ndarray) -> XState:
    """Read the X entries of a 4x4 matrix (off-X entries are ignored)."""
    rho = np.asarray(rho)
    return XState(
        float(rho[0, 0].real), float(rho[1, 1].real), float(rho[2, 2].real), float(rho[3, 3].real),
        complex(rho[0, 3]), complex(rho[1, 2]),
    )


@dataclass(frozen=True)
class Trajectory:
    taus: tuple[float, ...]
    states: tuple[XState, ...]
    scalars: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.taus) != len(self.states):
            raise ValueError("taus and states differ in length")
        if any(t1 <= t0 for t0, t1 in zip(self.taus, self.taus[1:])):
            raise ValueError("taus must be strictly increasing")
        for name, values in self.scalars.items():
            if len(values) != len(self.taus):
                raise ValueError(f"scalar column {name!r} has the wrong length")

    def __len__(self) -> int:
        return len(self.taus)
