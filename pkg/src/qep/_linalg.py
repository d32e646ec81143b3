"""Small dense eigensolvers and matrix exponential.

Sized for the 2x2 .. 5x5 generators of this package; nothing here is tuned
for large matrices.
"""

from __future__ import annotations

import math

import numpy as np

_EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    pass


def jacobi_eigh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ascending eigenvalues ``w`` and unitary ``v`` with ``a @ v = v * w``.
    """
    a = np.array(a, dtype=complex)
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = math.sqrt(sum(abs(a[p, q]) ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= _EPS * 1e-3 * scale:
                    continue
                # phase rotation makes a[p, q] real, then a real symmetric Jacobi step
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n, dtype=complex)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s * phase
                rot[q, p] = -s * np.conj(phase)
                a = rot.conj().T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    else:
        raise ConvergenceError("Jacobi sweeps did not converge")
    w = a.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hessenberg(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduction ``a = q @ h @ q^H`` with ``h`` upper Hessenberg."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1 :, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1 :, :])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v.conj())
        q[:, k + 1 :] -= 2.0 * np.outer(q[:, k + 1 :] @ v, v.conj())
        h[k + 2 :, k] = 0.0
    return h, q


def _givens(a: complex, b: complex) -> tuple[float, complex]:
    if b == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, 1.0 + 0j
    r = math.hypot(abs(a), abs(b))
    alpha = a / abs(a)
    return abs(a) / r, alpha * np.conj(b) / r


def _negligible(t: np.ndarray, k: int, norm: float) -> bool:
    # norm-wise test (backward stable) or the local one, whichever deflates first
    sub = abs(t[k, k - 1])
    tst = abs(t[k, k]) + abs(t[k - 1, k - 1])
    return sub <= _EPS * norm or sub <= _EPS * tst


def _split_2x2(t: np.ndarray, z: np.ndarray, k: int) -> None:
    """Triangularize the trailing 2x2 block at ``k`` by rotating an eigenvector into place."""
    p, q, r, s = t[k, k], t[k, k + 1], t[k + 1, k], t[k + 1, k + 1]
    half = 0.5 * (p - s)
    root = np.sqrt(half * half + q * r + 0j)
    if abs(half + root) < abs(half - root):
        root = -root
    lam = s - q * r / (half + root) if half + root != 0 else s
    x = np.array([q, lam - p]) if abs(q) + abs(lam - p) >= abs(lam - s) + abs(r) else np.array([lam - s, r])
    norm = np.linalg.norm(x)
    if norm == 0.0:
        t[k + 1, k] = 0.0
        return
    x = x / norm
    g = np.array([[x[0], -np.conj(x[1])], [x[1], np.conj(x[0])]])
    gh = g.conj().T
    t[k : k + 2, k:] = gh @ t[k : k + 2, k:]
    t[: k + 2, k : k + 2] = t[: k + 2, k : k + 2] @ g
    z[:, k : k + 2] = z[:, k : k + 2] @ g
    t[k + 1, k] = 0.0


def schur(a: np.ndarray, max_iter: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``a = z @ t @ z^H`` by Wilkinson-shifted QR on the Hessenberg form."""
    t, z = hessenberg(a)
    n = t.shape[0]
    norm = max(np.abs(t).sum(axis=0).max(), np.finfo(float).tiny)
    if max_iter is None:
        max_iter = 30 * max(10, n)
    hi = n - 1
    it = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            if _negligible(t, lo, norm):
                t[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            it = 0
            continue
        if hi - lo == 1:
            _split_2x2(t, z, lo)
            hi -= 1
            it = 0
            continue
        it += 1
        if it > max_iter:
            raise ConvergenceError("shifted QR did not converge")
        if it % 11 == 0:
            # exceptional shift breaks rare cycles
            mu = t[hi, hi] + 0.75 * abs(t[hi, hi - 1])
        else:
            p, q_, r, s = t[hi - 1, hi - 1], t[hi - 1, hi], t[hi, hi - 1], t[hi, hi]
            tr = p + s
            det = p * s - q_ * r
            disc = np.sqrt(tr * tr / 4.0 - det + 0j)
            l1, l2 = tr / 2.0 + disc, tr / 2.0 - disc
            mu = l1 if abs(l1 - s) < abs(l2 - s) else l2
        for k in range(lo, hi + 1):
            t[k, k] -= mu
        rots = []
        for k in range(lo, hi):
            c, s = _givens(t[k, k], t[k + 1, k])
            g = np.array([[c, s], [-np.conj(s), c]])
            t[k : k + 2, k:] = g @ t[k : k + 2, k:]
            t[k + 1, k] = 0.0
            rots.append(g)
        for k, g in zip(range(lo, hi), rots):
            gh = g.conj().T
            rows = min(k + 2, hi) + 1
            t[:rows, k : k + 2] = t[:rows, k : k + 2] @ gh
            z[:, k : k + 2] = z[:, k : k + 2] @ gh
        for k in range(lo, hi + 1):
            t[k, k] += mu
    return np.triu(t), z


def eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and unit-norm right eigenvectors of a general complex matrix."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy(), np.ones((1, 1), dtype=complex)
    t, z = schur(a)
    w = t.diagonal().copy()
    smin = max(_EPS * np.abs(t).max(), np.finfo(float).tiny)
    y = np.zeros((n, n), dtype=complex)
    for k in range(n):
        y[k, k] = 1.0
        for j in range(k - 1, -1, -1):
            denom = t[j, j] - w[k]
            if abs(denom) < smin:
                denom = smin
            y[j, k] = -(t[j, j + 1 : k + 1] @ y[j + 1 : k + 1, k]) / denom
    vecs = z @ y
    vecs /= np.linalg.norm(vecs, axis=0)
    return w, vecs


_PADE6 = [
    math.factorial(12 - k) * math.factorial(6) / (math.factorial(12) * math.factorial(k) * math.factorial(6 - k))
    for k in range(7)
]


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-6 Pade approximant."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    norm = np.abs(a).sum(axis=0).max()
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0 else 0
    x = a / 2.0**s
    ident = np.eye(n, dtype=complex)
    powers = [ident, x]
    for _ in range(5):
        powers.append(powers[-1] @ x)
    num = sum(c * p for c, p in zip(_PADE6, powers))
    den = sum(c * (-1) ** k * p for k, (c, p) in enumerate(zip(_PADE6, powers)))
    r = np.linalg.solve(den, num)
    for _ in range(s):
        r = r @ r
    return r
