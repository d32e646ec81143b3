"""Closed-form propagation of X states.

The (x, y, z) block of the equations of motion is ``-gamma + N`` with
``N = [[0, k, 0], [k, 0, i], [0, i, 0]]`` and ``N**3 = D2 * N`` where
``D2 = k**2 - 1``.  Every solution is therefore a combination of three kernels

    cm1_over_D2 = (cosh(D t) - 1) / D**2
    sinh_over_D = sinh(D t) / D
    cosh_val    = cosh(D t)

which are real, even functions of ``D`` and are evaluated here without ever
forming a complex square root.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import InitialCondition, Params, XState, initial_xstate, mix

EPS_EP = 1e-7
_SERIES_TERMS = 6


class Branch(enum.Enum):
    UNDER = "under"
    CRITICAL = "critical"
    OVER = "over"


@dataclass(frozen=True)
class Discriminant:
    kappa: float
    branch: Branch
    value: float  # sqrt(|kappa**2 - 1|)

    @classmethod
    def of(cls, kappa: float) -> "Discriminant":
        d2 = kappa * kappa - 1.0
        if abs(abs(kappa) - 1.0) <= EPS_EP:
            branch = Branch.CRITICAL
        elif d2 < 0:
            branch = Branch.UNDER
        else:
            branch = Branch.OVER
        return cls(kappa, branch, math.sqrt(abs(d2)))


@dataclass(frozen=True)
class KernelValues:
    cm1_over_D2: np.ndarray | float
    sinh_over_D: np.ndarray | float
    cosh_val: np.ndarray | float


def _series(d2: float, tau):
    # cosh(D t) = sum_n d2**n t**(2n) / (2n)!
    tau = np.asarray(tau, dtype=float)
    t2 = tau * tau
    cm1 = np.zeros_like(tau)
    sh = np.zeros_like(tau)
    term_c = t2 / 2.0  # d2**n t**(2n+2) / (2n+2)!
    term_s = tau.copy()  # d2**n t**(2n+1) / (2n+1)!
    for n in range(_SERIES_TERMS):
        cm1 = cm1 + term_c
        sh = sh + term_s
        term_c = term_c * d2 * t2 / ((2 * n + 3) * (2 * n + 4))
        term_s = term_s * d2 * t2 / ((2 * n + 2) * (2 * n + 3))
    return cm1, sh, 1.0 + d2 * cm1


def kernels(kappa: float, tau) -> KernelValues:
    """Branch-correct kernels for one ``kappa`` and scalar or array ``tau >= 0``."""
    disc = Discriminant.of(kappa)
    d2 = kappa * kappa - 1.0
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise ValueError("tau must be non-negative")
    if disc.branch is Branch.CRITICAL and np.all(abs(d2) * t * t < 1.0):
        cm1, sh, ch = _series(d2, t)
    elif d2 < 0:
        w = disc.value
        half = np.sin(0.5 * w * t)
        cm1 = 2.0 * half * half / (w * w)
        sh = np.sin(w * t) / w
        ch = np.cos(w * t)
    elif d2 > 0:
        w = disc.value
        half = np.sinh(0.5 * w * t)
        cm1 = 2.0 * half * half / (w * w)
        sh = np.sinh(w * t) / w
        ch = np.cosh(w * t)
    else:
        cm1, sh, ch = 0.5 * t * t, t.copy(), np.ones_like(t)
    if np.ndim(tau) == 0:
        return KernelValues(float(cm1), float(sh), float(ch))
    return KernelValues(cm1, sh, ch)


@dataclass(frozen=True)
class Fields:
    """Vectorised X-state entries along an array of times."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    h: np.ndarray
    m: np.ndarray

    @property
    def x(self):
        return self.b + self.c

    @property
    def y(self):
        return self.b - self.c

    @property
    def z(self):
        return self.m - np.conj(self.m)

    def state(self, i: int) -> XState:
        return XState(
            float(self.a[i]), float(self.b[i]), float(self.c[i]), float(self.d[i]),
            complex(self.h[i]), complex(self.m[i]),
        )


def evolve_fields(s0: XState, p: Params, tau) -> Fields:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    k = kernels(p.kappa, tau)
    g, kap = p.gamma, p.kappa
    e1 = np.exp(-g * tau)
    e2 = np.exp(-2.0 * g * tau)
    a0, x0, y0, d0 = s0.a, s0.x, s0.y, s0.d
    # z0 = 2i Im(m0); iz0 is real
    iz0 = -2.0 * complex(s0.m).imag
    im_z0 = 2.0 * complex(s0.m).imag

    # x0 propagator 1 + k^2 (cosh - 1)/D^2
    fx = 1.0 + kap * kap * k.cm1_over_D2

    a = a0 * e2
    x = (
        -2.0 * a0 * (e2 - e1 * fx)
        + x0 * e1 * fx
        + y0 * kap * e1 * k.sinh_over_D
        + iz0 * kap * e1 * k.cm1_over_D2
    )
    y = (
        y0 * e1 * k.cosh_val
        + (2.0 * a0 * kap + x0 * kap) * e1 * k.sinh_over_D
        + iz0 * e1 * k.sinh_over_D
    )
    im_z = (
        (2.0 * a0 + x0) * kap * e1 * k.cm1_over_D2
        + y0 * e1 * k.sinh_over_D
        + im_z0 * e1 * (1.0 - k.cm1_over_D2)
    )
    d = (
        d0
        + a0 * (1.0 + e2 - 2.0 * e1 * fx)
        + x0 * (1.0 - e1 * fx)
        - y0 * kap * e1 * k.sinh_over_D
        - iz0 * kap * e1 * k.cm1_over_D2
    )
    re_m = complex(s0.m).real * e1
    m = re_m + 0.5j * im_z
    h = complex(s0.h) * e1
    return Fields(a, 0.5 * (x + y), 0.5 * (x - y), d, h * np.ones_like(tau), m)


def propagate(s0: XState, p: Params, tau: float) -> XState:
    """State at rescaled time ``tau`` starting from ``s0``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return evolve_fields(s0, p, tau).state(0)


def mixed_fields(alpha: float, p: Params, tau) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Populations ``a``, ``d`` and coherence ``z`` for the mixed initial state.

    Uses the dedicated closed forms, rewritten with
    ``2 sinh^2(Dt/2)/D^2 = cm1_over_D2`` and ``2 sinh^2(Dt/2) coth(Dt/2)/D = sinh_over_D``
    so the same expressions cover every branch.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    k = kernels(p.kappa, tau)
    g, kap = p.gamma, p.kappa
    e1 = np.exp(-g * tau)
    a = (1.0 - alpha) * np.exp(-2.0 * g * tau)
    z = 1j * e1 * ((2.0 - alpha) * kap * k.cm1_over_D2 + alpha * k.sinh_over_D)
    d = (1.0 - alpha) * ((1.0 - e1) ** 2 - 2.0 * kap * kap * e1 * k.cm1_over_D2) + alpha * (
        1.0 - e1 - e1 * (kap * kap * k.cm1_over_D2 + kap * k.sinh_over_D)
    )
    return a, z, d


def propagate_mixed(alpha: float, p: Params, tau: float) -> XState:
    a, z, d = mixed_fields(alpha, p, tau)
    rest = evolve_fields(initial_xstate(mix(alpha)), p, tau)
    x = rest.x[0]
    y = rest.y[0]
    return XState(
        float(a[0]), float(0.5 * (x + y)), float(0.5 * (x - y)), float(d[0]),
        0j, complex(0.0, 0.5 * z[0].imag),
    )


def propagate_initial(ic: InitialCondition, p: Params, tau) -> Fields:
    return evolve_fields(initial_xstate(ic), p, tau)
