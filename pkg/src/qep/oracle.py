"""Brute-force reference path: RK4 on the full 4x4 GKSL equation and the
general Wootters concurrence.

Shares nothing with :mod:`qep.analytic` beyond the parameter type, so the two
can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._linalg import jacobi_eigh
from .core import Params

# single qubit in the ordering (|1>, |0>)
_SP = np.array([[0, 1], [0, 0]], dtype=complex)
_SM = _SP.T.copy()
_SY = np.array([[0, -1j], [1j, 0]])
_I2 = np.eye(2, dtype=complex)

SIGMA_P = np.kron(_SP, _I2)
SIGMA_M = np.kron(_SM, _I2)
MU_P = np.kron(_I2, _SP)
MU_M = np.kron(_I2, _SM)
SIGMA_Z = np.kron(np.diag([1.0, -1.0]), _I2)
MU_Z = np.kron(_I2, np.diag([1.0, -1.0]))
SPIN_FLIP = np.kron(_SY, _SY)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
DRIFT_TOL = 1e-9
MAX_DT = 1e-2
_RESYMMETRIZE_EVERY = 100
# eigenvalues of rho below this fraction of the largest are round-off
_NOISE_FLOOR = 16 * np.finfo(float).eps


class StepTooLarge(RuntimeError):
    """Trace drift beyond tolerance during integration."""


def check_density(rho: np.ndarray) -> None:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise ValueError(f"trace {np.trace(rho)} != 1")
    if jacobi_eigh(rho)[0][0] < -PSD_TOL:
        raise ValueError("density matrix is not positive semidefinite")


def _dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    op_d = op.conj().T
    n = op_d @ op
    return op @ rho @ op_d - 0.5 * (n @ rho + rho @ n)


def _left_right(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # vec(a rho b) for row-major vec
    return np.kron(a, b.T)


_HAM = 0.5 * (SIGMA_P @ MU_M + SIGMA_M @ MU_P)
_I4 = np.eye(4, dtype=complex)


def _dissipator_super(op: np.ndarray) -> np.ndarray:
    n = op.conj().T @ op
    return _left_right(op, op.conj().T) - 0.5 * (_left_right(n, _I4) + _left_right(_I4, n))


_UNITARY_SUPER = -1j * (_left_right(_HAM, _I4) - _left_right(_I4, _HAM))
_DECAY_1 = _dissipator_super(SIGMA_M)
_DECAY_2 = _dissipator_super(MU_M)


@dataclass(frozen=True)
class LindbladGenerator:
    """Right-hand side ``d rho / d tau`` of the master equation in rescaled time.

    Swap Hamiltonian ``(s+ m- + s- m+) / 2`` and one amplitude-damping channel
    per qubit with rates ``gamma - kappa`` (first) and ``gamma + kappa`` (second).
    A tuple of Params builds a batched generator acting on ``(n, 4, 4)`` stacks.
    """

    params: Params | tuple[Params, ...]

    @property
    def hamiltonian(self) -> np.ndarray:
        return _HAM

    @cached_property
    def superoperator(self) -> np.ndarray:
        """16x16 matrix (or a stack of them) acting on row-major ``vec(rho)``."""
        if isinstance(self.params, Params):
            g, k = self.params.gamma, self.params.kappa
            return _UNITARY_SUPER + (g - k) * _DECAY_1 + (g + k) * _DECAY_2
        g = np.array([p.gamma for p in self.params])[:, None, None]
        k = np.array([p.kappa for p in self.params])[:, None, None]
        return _UNITARY_SUPER + (g - k) * _DECAY_1 + (g + k) * _DECAY_2

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_generator(self, rho)


def apply_generator(g: LindbladGenerator, rho: np.ndarray) -> np.ndarray:
    """Time derivative of ``rho`` (shape ``(..., 4, 4)``); trace-free by construction."""
    rho = np.asarray(rho, dtype=complex)
    vec = rho.reshape(rho.shape[:-2] + (16, 1))
    return (g.superoperator @ vec).reshape(rho.shape)


def lindblad_rhs(p: Params, rho: np.ndarray) -> np.ndarray:
    """The same right-hand side written out term by term; reference for the superoperator."""
    out = -1j * (_HAM @ rho - rho @ _HAM)
    out = out + (p.gamma - p.kappa) * _dissipator(SIGMA_M, rho)
    return out + (p.gamma + p.kappa) * _dissipator(MU_M, rho)


def _rk4_step(g: LindbladGenerator, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = apply_generator(g, rho)
    k2 = apply_generator(g, rho + 0.5 * h * k1)
    k3 = apply_generator(g, rho + 0.5 * h * k2)
    k4 = apply_generator(g, rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    g: LindbladGenerator,
    rho0: np.ndarray,
    tau_end: float,
    dt: float = 1e-3,
    every: int = 1,
    hermitian: bool = True,
) -> list[tuple[float, np.ndarray]]:
    """Fixed-step classical RK4 from 0 to ``tau_end``.

    ``rho0`` may carry leading batch axes.  The step is shrunk to
    ``tau_end / ceil(tau_end / dt)`` so the last sample lands on ``tau_end``;
    samples are kept every ``every`` steps plus the final one.  Set
    ``hermitian=False`` to propagate a general operator (no re-symmetrization).
    """
    if not dt > 0 or dt > MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}], got {dt}")
    if tau_end < 0:
        raise ValueError("tau_end must be non-negative")
    rho = np.array(rho0, dtype=complex)
    n_steps = max(1, math.ceil(tau_end / dt - 1e-9)) if tau_end > 0 else 0
    h = tau_end / n_steps if n_steps else 0.0
    trace0 = np.trace(rho, axis1=-2, axis2=-1)
    out = [(0.0, rho.copy())]
    for i in range(1, n_steps + 1):
        rho = _rk4_step(g, rho, h)
        if hermitian and i % _RESYMMETRIZE_EVERY == 0:
            rho = 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))
        if i % every == 0 or i == n_steps:
            drift = np.abs(np.trace(rho, axis1=-2, axis2=-1) - trace0).max()
            if not drift <= DRIFT_TOL:
                raise StepTooLarge(f"trace drift {drift:.2e} at tau={i * h:.4f}")
            out.append((i * h, rho.copy()))
    return out


def wootters_concurrence(rho: np.ndarray) -> float:
    """Concurrence of a general two-qubit density matrix.

    With ``rho = A A^H`` (``A = V sqrt(W)`` from a Jacobi eigendecomposition),
    the square roots of the eigenvalues of ``rho (sy sy) rho* (sy sy)`` are
    the singular values of ``A^T (sy sy) A``.  Those are read off the
    Hermitian dilation ``[[0, M], [M^H, 0]]``, so no square root of a
    near-zero eigenvalue is ever taken.
    """
    rho = np.asarray(rho, dtype=complex)
    w, v = jacobi_eigh(rho)
    w = np.where(w > _NOISE_FLOOR * max(w[-1], 0.0), w, 0.0)
    a = v * np.sqrt(w)
    m = a.T @ SPIN_FLIP @ a
    dilation = np.block([[np.zeros((4, 4)), m], [m.conj().T, np.zeros((4, 4))]])
    sv = jacobi_eigh(dilation)[0][::-1][:4]
    return float(min(1.0, max(0.0, sv[0] - sv[1] - sv[2] - sv[3])))


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))
