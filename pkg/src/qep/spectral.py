"""Eigenstructure of the small non-Hermitian generators.

Three families are covered:

* ``L`` (5x5) drives u = (a, x, y, z, d) in rescaled time,
* ``M`` (4x4) drives the gauge-transformed vector
  q = (<s+ s->, <s+ m->, <s- m+>, <m+ m->) via ``i dq/dtau = M q``,
* ``K`` (2x2) is the classical damped oscillator, the textbook EP.

EP order here means the number of eigenvectors of simple eigenvalues that
coalesce as the parameter approaches the EP.  Eigenvectors of a semisimple
repeated eigenvalue are not unique and are left out of the count.  The full
Jordan structure at the EP is reported separately in
``SpectralReport.jordan_blocks``; the two differ for ``M``, whose zero
eigenvalue carries blocks (3, 1) but only one coalescing pair.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._linalg import eig, expm
from .analytic import EPS_EP
from .core import Params, XState, xstate_to_density
from .oracle import SIGMA_M, SIGMA_P, MU_M, MU_P, LindbladGenerator, integrate

RANK_TOL = 1e-7
ANGLE_TOL = 1e-3
CLUSTER_RADIUS = 1e-4
SNAP_TOL = 1e-12
_PROBE_STEPS = (1e-4, 1e-6)

Family = Callable[[float], np.ndarray]


class NoEPInRange(ValueError):
    pass


class NotDefective(ValueError):
    pass


class Phase(enum.Enum):
    PT_SYMMETRIC = "PTSymmetric"
    BROKEN = "Broken"
    CRITICAL = "Critical"


def phase_of(kappa: float) -> Phase:
    if abs(abs(kappa) - 1.0) <= EPS_EP:
        return Phase.CRITICAL
    return Phase.PT_SYMMETRIC if abs(kappa) < 1.0 else Phase.BROKEN


def generator_l(gamma: float, kappa: float) -> np.ndarray:
    g, k = float(gamma), float(kappa)
    return np.array(
        [
            [-2 * g, 0, 0, 0, 0],
            [2 * g, -g, k, 0, 0],
            [2 * k, k, -g, 1j, 0],
            [0, 0, 1j, -g, 0],
            [0, g, -k, 0, 0],
        ],
        dtype=complex,
    )


def generator_m(kappa: float) -> np.ndarray:
    k = float(kappa)
    return np.array(
        [
            [1j * k, 0.5, -0.5, 0],
            [0.5, 0, 0, -0.5],
            [-0.5, 0, 0, 0.5],
            [0, -0.5, 0.5, -1j * k],
        ],
        dtype=complex,
    )


# s_x m_x swaps raising and lowering on both qubits
PARITY = np.fliplr(np.eye(4)).astype(complex)


def pt_transform(m: np.ndarray) -> np.ndarray:
    """``(PT) m (PT)^-1`` with T the complex conjugation."""
    return PARITY @ np.conj(m) @ PARITY


def damped_oscillator_matrix(gamma_c: float, k: float) -> np.ndarray:
    return np.array([[0.0, 1.0], [-k, -gamma_c]], dtype=complex)


@dataclass(frozen=True)
class Coalescence:
    indices: tuple[int, int]
    gap: float
    angle: float


@dataclass(frozen=True)
class SpectralReport:
    """Eigen-decomposition of one generator.

    ``right_vectors`` holds eigenvectors as columns; at an EP the columns of
    the defective cluster span its generalized eigenspace and
    ``jordan_chain`` holds the chain ``(v0, ..., v_{n-1})``.  Columns of
    ``left_vectors`` form the dual basis: ``left.conj().T @ right = I``.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    biorthogonality_residual: float
    coalescence: tuple[Coalescence, ...]
    ep_order: int | None
    phase: Phase | None
    jordan_blocks: tuple[int, ...] = ()
    jordan_chain: tuple[np.ndarray, ...] = field(default=())

    @property
    def min_angle(self) -> float:
        return min((c.angle for c in self.coalescence), default=math.inf)


def vector_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Scale-free coalescence metric ``1 - |<u, v>|`` on normalized vectors."""
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    return float(max(0.0, 1.0 - abs(np.vdot(u, v))))


def coalescence_metrics(w: np.ndarray, v: np.ndarray) -> tuple[Coalescence, ...]:
    return tuple(
        Coalescence((i, j), float(abs(w[i] - w[j])), vector_angle(v[:, i], v[:, j]))
        for i, j in itertools.combinations(range(len(w)), 2)
    )


def min_pair_angle(g: np.ndarray) -> float:
    w, v = eig(g)
    return min(c.angle for c in coalescence_metrics(w, v))


def _scale(g: np.ndarray) -> float:
    return max(1.0, float(np.abs(g).sum(axis=0).max()))


def _clusters(w: np.ndarray, radius: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in range(len(w)):
        hits = [grp for grp in groups if any(abs(w[i] - w[j]) <= radius for j in grp)]
        merged = [i] + [j for grp in hits for j in grp]
        groups = [grp for grp in groups if grp not in hits] + [sorted(merged)]
    return sorted(groups)


def snapped_eigenvalues(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[list[int]]]:
    """Eigenpairs with numerically degenerate clusters collapsed onto their mean.

    Individual members of a defective cluster carry O(eps**(1/n)) error, but
    the cluster mean and the centered characteristic coefficients are
    accurate to O(eps).  When every centered coefficient is at round-off
    level the cluster is declared exactly degenerate.  Returns the eigenvalues,
    the raw eigenvectors and the list of snapped clusters.
    """
    w, v = eig(g)
    scale = _scale(g)
    snapped = []
    for grp in _clusters(w, CLUSTER_RADIUS * scale):
        if len(grp) < 2:
            continue
        mean = w[grp].mean()
        coeffs = np.poly(w[grp] - mean)[2:]
        if np.all(np.abs(coeffs) <= SNAP_TOL * scale):
            w[grp] = mean
            snapped.append(grp)
    return w, v, snapped


def _rank(a: np.ndarray) -> int:
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > RANK_TOL * max(1.0, s[0])))


def _null_space(a: np.ndarray) -> np.ndarray:
    _, s, vh = np.linalg.svd(a)
    cut = RANK_TOL * max(1.0, s[0])
    return vh[np.sum(s > cut):].conj().T


def jordan_block_sizes(g: np.ndarray, lam: complex, multiplicity: int) -> tuple[int, ...]:
    """Jordan block sizes of ``lam`` from the rank sequence of ``(g - lam)^j``."""
    n = g.shape[0]
    a = g - lam * np.eye(n)
    ranks = [n]
    power = np.eye(n, dtype=complex)
    for _ in range(multiplicity + 1):
        power = power @ a
        ranks.append(_rank(power))
    at_least = [ranks[j - 1] - ranks[j] for j in range(1, len(ranks))]
    sizes = []
    for j, count in enumerate(at_least, start=1):
        longer = at_least[j] if j < len(at_least) else 0
        sizes += [j] * (count - longer)
    return tuple(sorted(sizes, reverse=True))


def generalized_eigenvectors(g: np.ndarray, lam: complex, length: int) -> list[np.ndarray]:
    """Jordan chain ``[v0, ..., v_{n-1}]`` with ``(g - lam) v_j = v_{j-1}`` and ``|v0| = 1``.

    Raises NotDefective when ``lam`` is semisimple or carries no chain of
    the requested length.
    """
    g = np.asarray(g, dtype=complex)
    n = g.shape[0]
    a = g - lam * np.eye(n)
    if length < 1:
        raise ValueError("chain length must be positive")
    if _rank(a) == _rank(a @ a):
        raise NotDefective(f"eigenvalue {lam} is not defective")
    top = np.linalg.matrix_power(a, length)
    basis = _null_space(top)
    if basis.shape[1] == 0:
        raise NotDefective(f"{lam} is not an eigenvalue")
    lower = np.linalg.matrix_power(a, length - 1) @ basis
    _, s, vh = np.linalg.svd(lower)
    if s[0] <= RANK_TOL * max(1.0, np.linalg.norm(lower)):
        raise NotDefective(f"no Jordan chain of length {length} at {lam}")
    head = basis @ vh[0].conj()
    head = head / np.linalg.norm(lower @ vh[0].conj())
    chain = [head]
    for _ in range(length - 1):
        chain.append(a @ chain[-1])
    return chain[::-1]


def coalescing_order(family: Family, x0: float) -> int | None:
    """Size of the largest set of eigenvectors that coalesce as ``x -> x0``.

    Pairs are coalescing when their angle is small at the closer probe and
    shrinks roughly in proportion to the probe distance.
    """
    probes = []
    for step in _PROBE_STEPS:
        w, v, repeated = snapped_eigenvalues(family(x0 + step))
        probes.append((coalescence_metrics(w, v), {i for grp in repeated for i in grp}))
    (far, _), (near, skip) = probes
    ratio = _PROBE_STEPS[1] / _PROBE_STEPS[0]
    n = family(x0).shape[0]
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            i = parent[i]
        return i

    found = False
    for c_far, c_near in zip(far, near):
        if skip.intersection(c_near.indices):
            continue
        if c_near.angle < ANGLE_TOL and c_near.angle <= 10.0 * ratio * max(c_far.angle, 1e-300):
            i, j = c_near.indices
            parent[root(i)] = root(j)
            found = True
    if not found:
        return None
    sizes: dict[int, int] = {}
    for i in range(n):
        sizes[root(i)] = sizes.get(root(i), 0) + 1
    return max(sizes.values())


def _dual_basis(g: np.ndarray, w: np.ndarray, right: np.ndarray, clusters: list[list[int]]) -> np.ndarray:
    """Left vectors from eigenvectors of ``g^H``, paired and biorthonormalized per cluster."""
    wl, vl = eig(g.conj().T)
    left = np.zeros_like(right)
    free = list(range(len(wl)))
    singles = [[i] for i in range(len(w)) if not any(i in c for c in clusters)]
    for grp in clusters + singles:
        target = np.conj(w[grp].mean())
        picks = sorted(free, key=lambda j: abs(wl[j] - target))[: len(grp)]
        for j in picks:
            free.remove(j)
        lb = vl[:, picks]
        r = right[:, grp]
        left[:, grp] = lb @ np.linalg.inv(r.conj().T @ lb)
    return left


def analyze(
    g: np.ndarray,
    family: Family | None = None,
    x0: float | None = None,
    at_ep: bool = False,
    phase: Phase | None = None,
) -> SpectralReport:
    """Spectral report for ``g``; ``family``/``x0`` locate it in a one-parameter family."""
    g = np.asarray(g, dtype=complex)
    w, v, clusters = snapped_eigenvalues(g)
    metrics = coalescence_metrics(eig(g)[0], v)
    right = v.copy()
    order = None
    blocks: tuple[int, ...] = ()
    chain: tuple[np.ndarray, ...] = ()
    if at_ep and family is not None and x0 is not None:
        order = coalescing_order(family, x0)
    left = None
    if at_ep and order:
        if clusters:
            defective = max(clusters, key=len)
        else:
            # near, but not on, the EP: the tightest group of `order` eigenvalues
            defective = list(min(
                itertools.combinations(range(len(w)), order),
                key=lambda grp: max(abs(w[i] - w[j]) for i in grp for j in grp),
            ))
        lam = w[defective].mean()
        try:
            chain = tuple(generalized_eigenvectors(g, lam, order))
        except NotDefective:
            chain = ()
        if chain and clusters:
            blocks = jordan_block_sizes(g, lam, len(defective))
            # the generalized eigenspace replaces the coalesced eigenvectors
            power = np.linalg.matrix_power(g - lam * np.eye(g.shape[0]), len(defective))
            right[:, defective] = _null_space(power)
            left = np.linalg.inv(right).conj().T
    if left is None:
        left = _dual_basis(g, w, right, clusters)
    residual = float(np.abs(left.conj().T @ right - np.eye(g.shape[0])).max())
    return SpectralReport(w, right, left, residual, metrics, order, phase, blocks, chain)


def liouvillian_spectrum(p: Params) -> SpectralReport:
    phase = phase_of(p.kappa)
    return analyze(
        generator_l(p.gamma, p.kappa),
        family=lambda k: generator_l(p.gamma, k),
        x0=p.kappa,
        at_ep=phase is Phase.CRITICAL,
        phase=phase,
    )


def liouvillian_eigenvalues_exact(p: Params) -> np.ndarray:
    """Closed-form eigenvalues ``0, -2g, -g, -g - D, -g + D`` with ``D = sqrt(k^2 - 1)``."""
    d = np.sqrt(complex(p.delta_sq))
    g = p.gamma
    return np.array([0.0, -2 * g, -g, -g - d, -g + d], dtype=complex)


def liouvillian_eigenvectors_exact(p: Params) -> list[np.ndarray]:
    """Right eigenvectors ``u0 .. u4`` in the order of :func:`liouvillian_eigenvalues_exact`."""
    g, k = p.gamma, p.kappa
    d = np.sqrt(complex(p.delta_sq))
    vecs = [np.array([0, 0, 0, 0, 1], dtype=complex)]
    if g > 0:
        # -2g: the doubly excited population feeding the rest
        u1 = np.linalg.solve(
            generator_l(g, k)[1:, 1:] + 2 * g * np.eye(4), -generator_l(g, k)[1:, 0]
        )
        vecs.append(np.concatenate(([1.0], u1)))
    else:
        vecs.append(np.array([1, 0, 0, 0, -1], dtype=complex))
    vecs.append(np.array([0, 1, 0, 1j * k, -1], dtype=complex))
    for s in (-1, 1):
        vecs.append(np.array([0, k, s * d, 1j, -k], dtype=complex))
    return vecs


@dataclass(frozen=True)
class PTPhase:
    kappa: float
    phase: Phase
    eigenvalues: np.ndarray

    @property
    def all_real(self) -> bool:
        return bool(np.all(np.abs(self.eigenvalues.imag) <= 1e-9))


def pt_phase(kappa: float) -> PTPhase:
    if not math.isfinite(kappa):
        raise ValueError("kappa must be finite")
    w, _, _ = snapped_eigenvalues(generator_m(kappa))
    order = np.lexsort((w.imag, w.real))
    return PTPhase(float(kappa), phase_of(kappa), w[order])


def m_spectrum(kappa: float) -> SpectralReport:
    phase = phase_of(kappa)
    return analyze(generator_m(kappa), family=generator_m, x0=kappa, at_ep=phase is Phase.CRITICAL, phase=phase)


def propagator_spectral_radius(kappa: float, tau: float = 1.0) -> float:
    """Spectral radius of ``exp(-i M tau)``; 1 in the symmetric phase, ``exp(D tau)`` when broken."""
    w, _, _ = snapped_eigenvalues(expm(-1j * tau * generator_m(kappa)))
    return float(np.abs(w).max())


def correlation_vector(rho: np.ndarray) -> np.ndarray:
    """``q = (<s+ s->, <s+ m->, <s- m+>, <m+ m->)``, i.e. ``(a + b, m*, m, a + c)`` for X states."""
    ops = (SIGMA_P @ SIGMA_M, SIGMA_P @ MU_M, SIGMA_M @ MU_P, MU_P @ MU_M)
    return np.array([np.trace(op @ rho) for op in ops])


def gauge_transform_check(p: Params, rho0: np.ndarray | XState, tau: float, dt: float = 1e-3) -> float:
    """Max deviation between the oracle's ``e^{g tau} q(tau)`` and ``exp(-i M tau) q0``."""
    if isinstance(rho0, XState):
        rho0 = xstate_to_density(rho0)
    rho0 = np.asarray(rho0, dtype=complex)
    q0 = correlation_vector(rho0)
    if tau == 0:
        return 0.0
    _, rho_t = integrate(LindbladGenerator(p), rho0, tau, dt=dt, every=10**9, hermitian=False)[-1]
    lhs = math.exp(p.gamma * tau) * correlation_vector(rho_t)
    rhs = expm(-1j * tau * generator_m(p.kappa)) @ q0
    return float(np.abs(lhs - rhs).max())


def damped_oscillator_spectrum(gamma_c: float, k: float) -> SpectralReport:
    if not k > 0 or gamma_c < 0:
        raise ValueError("need k > 0 and gamma_c >= 0")
    disc = gamma_c * gamma_c - 4.0 * k
    if abs(disc) <= EPS_EP * max(1.0, 4.0 * k):
        phase = Phase.CRITICAL
    else:
        phase = Phase.PT_SYMMETRIC if disc < 0 else Phase.BROKEN
    return analyze(
        damped_oscillator_matrix(gamma_c, k),
        family=lambda gc: damped_oscillator_matrix(gc, k),
        x0=gamma_c,
        at_ep=phase is Phase.CRITICAL,
        phase=phase,
    )


def _golden_min(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - inv * (hi - lo), lo + inv * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - inv * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def _family_of(name: str | Family, gamma: float) -> Family:
    if callable(name):
        return name
    if name == "L":
        return lambda k: generator_l(gamma, k)
    if name == "M":
        return generator_m
    raise ValueError(f"unknown generator family {name!r}")


def ep_detect(family: str | Family, kappas, gamma: float = 2.0) -> list[tuple[float, int]]:
    """Locate EPs of a one-parameter family over a scan grid.

    Local minima of the smallest pairwise eigenvector angle are refined by
    golden-section search inside their grid bracket.  ``gamma`` only enters
    the ``"L"`` family.
    """
    fam = _family_of(family, gamma)
    grid = np.asarray(sorted(set(float(k) for k in kappas)))
    if len(grid) < 3:
        raise ValueError("scan needs at least 3 points")
    angles = np.array([min_pair_angle(fam(k)) for k in grid])
    found: list[tuple[float, int]] = []
    for i in range(len(grid)):
        left = angles[i - 1] if i > 0 else math.inf
        right = angles[i + 1] if i + 1 < len(grid) else math.inf
        if not (angles[i] <= left and angles[i] <= right):
            continue
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        k_star = _golden_min(lambda k: min_pair_angle(fam(k)), lo, hi)
        if min_pair_angle(fam(k_star)) >= ANGLE_TOL:
            continue
        order = coalescing_order(fam, k_star)
        if order is None:
            continue
        if found and abs(found[-1][0] - k_star) < 1e-6:
            continue
        found.append((k_star, order))
    if not found:
        raise NoEPInRange(f"no exceptional point in [{grid[0]}, {grid[-1]}]")
    return found
