"""Concurrence, correlation functions and first-maximum search.

For the single-excitation start the first maximum has a closed form on each
branch; it is always cross-checked against a bracketed root of the
derivative.  The doubly excited and mixed starts are searched numerically on
the clamped concurrence, whose derivative jumps at sudden-death edges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .analytic import Discriminant, Fields, evolve_fields, kernels, mixed_fields
from .core import InitialCondition, Params, Trajectory, XState, initial_xstate

GRID_STEP = 1e-2
GOLDEN_WIDTH = 1e-10
POSITIVE_FLOOR = 1e-12
CROSSCHECK_TOL = 1e-8


class NoPositiveConcurrence(ValueError):
    pass


class NoMaximum(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


class Method(enum.Enum):
    CLOSED_FORM = "ClosedForm"
    ROOT_FIND = "RootFind"


@dataclass(frozen=True)
class FirstMax:
    tau_star: float
    value: float
    method: Method


def concurrence_x(s: XState) -> float:
    c = 2.0 * max(0.0, abs(s.m) - math.sqrt(max(s.a * s.d, 0.0)), abs(s.h) - math.sqrt(max(s.b * s.c, 0.0)))
    return min(c, 1.0)


def concurrence_fields(f: Fields) -> np.ndarray:
    ad = np.sqrt(np.clip(f.a * f.d, 0.0, None))
    bc = np.sqrt(np.clip(f.b * f.c, 0.0, None))
    return np.clip(2.0 * np.maximum(np.abs(f.m) - ad, np.abs(f.h) - bc), 0.0, 1.0)


def _scalar(tau, values):
    return float(values[0]) if np.ndim(tau) == 0 else values


def concurrence_10(p: Params, tau):
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    k = kernels(p.kappa, t)
    return _scalar(tau, np.exp(-p.gamma * t) * np.abs(p.kappa * k.cm1_over_D2 + k.sinh_over_D))


def concurrence_01(p: Params, tau):
    return concurrence_10(p.reflected(), tau)


def concurrence_11(p: Params, tau):
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    k = kernels(p.kappa, t)
    e1 = np.exp(-p.gamma * t)
    d = (1.0 - e1) ** 2 - 2.0 * p.kappa**2 * e1 * k.cm1_over_D2
    c = 2.0 * abs(p.kappa) * e1 * k.cm1_over_D2 - 2.0 * e1 * np.sqrt(np.clip(d, 0.0, None))
    return _scalar(tau, np.maximum(c, 0.0))


def concurrence_mix(alpha: float, p: Params, tau):
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    a, z, d = mixed_fields(alpha, p, t)
    c = np.abs(z) - 2.0 * np.sqrt(np.clip(a * d, 0.0, None))
    return _scalar(tau, np.maximum(c, 0.0))


def concurrence(ic: InitialCondition, p: Params, tau):
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    return _scalar(tau, concurrence_fields(evolve_fields(initial_xstate(ic), p, t)))


def _golden_max(f, lo: float, hi: float, width: float = GOLDEN_WIDTH) -> float:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - inv * (hi - lo), lo + inv * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > width:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - inv * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def search_window(p: Params) -> float:
    return 20.0 / max(p.gamma, 0.1)


def _grid(p: Params) -> np.ndarray:
    n = int(math.floor(search_window(p) / GRID_STEP + 1e-9))
    return GRID_STEP * np.arange(n + 1)


def first_local_max(f, p: Params) -> FirstMax:
    """Earliest strict local maximum above the positivity floor of a vectorized ``f(tau)``."""
    taus = _grid(p)
    v = f(taus)
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] > v[2:]) & (v[1:-1] > POSITIVE_FLOOR)
    hits = np.nonzero(inner)[0]
    if len(hits) == 0:
        raise NoPositiveConcurrence(f"no positive maximum for gamma={p.gamma}, kappa={p.kappa}")
    i = hits[0] + 1
    tau = _golden_max(lambda t: float(f(np.array([t]))[0]), taus[i - 1], taus[i + 1])
    return FirstMax(tau, float(f(np.array([tau]))[0]), Method.ROOT_FIND)


def _bracket_10(p: Params, tau):
    # d C10 / d tau up to the positive factor e^{-g tau}
    k = kernels(p.kappa, tau)
    return -p.gamma * p.kappa * k.cm1_over_D2 + (p.kappa - p.gamma) * k.sinh_over_D + k.cosh_val


def _first_root(h, p: Params) -> float:
    taus = _grid(p)[1:]
    v = h(taus)
    down = np.nonzero((v[:-1] > 0) & (v[1:] <= 0))[0]
    if len(down) == 0:
        raise NoMaximum(f"no stationary point for gamma={p.gamma}, kappa={p.kappa}")
    i = down[0]
    if v[i + 1] == 0:
        return float(taus[i + 1])
    return brentq(lambda t: float(h(t)), taus[i], taus[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)


def tau10_closed_form(p: Params) -> float:
    """First-maximum time of C10 from the branch formulas (tanh, tan, or the EP limit)."""
    g, k = p.gamma, p.kappa
    if g <= 0:
        raise ValueError("gamma must be positive")
    if k == 0.0:
        return math.atan(1.0 / g)
    q = math.sqrt(1.0 + g * g)
    s = 1.0 if k > 0 else -1.0
    if abs(k) == 1.0:
        return (1.0 - s * g + s * q) / g
    disc = Discriminant.of(k)
    dv = disc.value
    # numerator and denominator are scaled by kappa to stay finite near kappa = 0
    bk = (k - g) * dv
    if k * k > 1.0:
        ak = dv * dv - g * k
        num = g * abs(k) * bk - s * dv * ak * q
        den = g * abs(k) * ak - s * dv * bk * q
        return math.atanh(-num / den) / dv
    ak = -dv * dv - g * k
    num = g * abs(k) * bk - s * dv * ak * q
    den = g * abs(k) * ak + s * dv * bk * q
    theta = math.atan(-num / den)
    if theta <= 0:
        theta += math.pi
    return theta / dv


def tau10_root(p: Params) -> float:
    return _first_root(lambda t: _bracket_10(p, t), p)


def first_max_10(p: Params) -> FirstMax:
    if p.gamma <= 0:
        raise ValueError("gamma must be positive")
    closed = tau10_closed_form(p)
    root = tau10_root(p)
    if not abs(closed - root) <= CROSSCHECK_TOL:
        raise NumericalFailure(f"closed form {closed!r} and root {root!r} disagree")
    return FirstMax(closed, concurrence_10(p, closed), Method.CLOSED_FORM)


def first_max_10_numeric(p: Params) -> FirstMax:
    tau = tau10_root(p)
    return FirstMax(tau, concurrence_10(p, tau), Method.ROOT_FIND)


def first_max_11(p: Params) -> FirstMax:
    if p.gamma <= 0:
        raise ValueError("gamma must be positive")
    return first_local_max(lambda t: concurrence_11(p, t), p)


def first_max_mix(alpha: float, p: Params) -> FirstMax:
    if p.gamma <= 0:
        raise ValueError("gamma must be positive")
    return first_local_max(lambda t: concurrence_mix(alpha, p, t), p)


def first_max(ic: InitialCondition, p: Params) -> FirstMax:
    return first_local_max(lambda t: concurrence(ic, p, t), p)


def correlation_xy_fields(f: Fields) -> np.ndarray:
    """<s_x m_y> = -i (z - h + h*)."""
    return np.real(-1j * (f.z - f.h + np.conj(f.h)))


def correlation_yx_fields(f: Fields) -> np.ndarray:
    """<s_y m_x> = i (z + h - h*)."""
    return np.real(1j * (f.z + f.h - np.conj(f.h)))


def correlation_xy(p: Params, ic: InitialCondition, tau):
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    return _scalar(tau, correlation_xy_fields(evolve_fields(initial_xstate(ic), p, t)))


def correlation_yx(p: Params, ic: InitialCondition, tau):
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    return _scalar(tau, correlation_yx_fields(evolve_fields(initial_xstate(ic), p, t)))


def correlation_xy_11(p: Params, tau):
    """Closed form ``2 k e^{-g t} (cosh(D t) - 1) / D^2`` for the doubly excited start."""
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    k = kernels(p.kappa, t)
    return _scalar(tau, 2.0 * p.kappa * np.exp(-p.gamma * t) * k.cm1_over_D2)


def _artanh_ratio(x: float) -> float:
    # artanh(sqrt(x)) / sqrt(x), continued to x < 0 as atan(sqrt(-x)) / sqrt(-x)
    if abs(x) < 1e-4:
        return sum(x**n / (2 * n + 1) for n in range(6))
    if x > 0:
        r = math.sqrt(x)
        return math.atanh(r) / r
    r = math.sqrt(-x)
    return math.atan(r) / r


def tau_xy_closed_form(p: Params) -> float:
    """Stationary point of <s_x m_y> for the doubly excited start: ``coth(D t / 2) = g / D``."""
    if p.gamma <= 0:
        raise ValueError("gamma must be positive")
    return 2.0 / p.gamma * _artanh_ratio(p.delta_sq / p.gamma**2)


def first_max_corr_xy(p: Params) -> FirstMax:
    if p.kappa <= 0:
        raise NoMaximum("<s_x m_y> has no positive maximum unless kappa > 0")
    tau = tau_xy_closed_form(p)

    def slope(t):
        k = kernels(p.kappa, t)
        return k.sinh_over_D - p.gamma * k.cm1_over_D2

    root = _first_root(slope, p)
    if not abs(tau - root) <= CROSSCHECK_TOL:
        raise NumericalFailure(f"closed form {tau!r} and root {root!r} disagree")
    return FirstMax(tau, correlation_xy_11(p, tau), Method.CLOSED_FORM)


def trajectory(p: Params, ic: InitialCondition, taus) -> Trajectory:
    taus = np.asarray(taus, dtype=float)
    f = evolve_fields(initial_xstate(ic), p, taus)
    states = tuple(f.state(i) for i in range(len(taus)))
    scalars = {
        "C": tuple(float(c) for c in concurrence_fields(f)),
        "corr_xy": tuple(float(c) for c in correlation_xy_fields(f)),
    }
    return Trajectory(tuple(float(t) for t in taus), states, scalars)

