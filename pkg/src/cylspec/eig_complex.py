"""Dense complex eigenvalues: balancing, Hessenberg reduction, shifted QR.

Eigenvalues only.  A nearest-eigenvalue Rayleigh-quotient iteration for
complex tridiagonal operators covers matrices above the dense size cap.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from ._tridiag import TridiagonalLU
from .discretize import TridiagonalOperator
from .errors import NumericError, ParameterError, ResourceError

MAX_DENSE_DIM = 2500
ITERATION_CAP = 40
EXCEPTIONAL_EVERY = 10
BALANCE_SWEEPS = 100

_EPS = np.finfo(float).eps


@dataclass
class ComplexSpectrum:
    eigenvalues: list
    converged: list
    iterations: list
    checks: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    def sorted(self):
        """Eigenvalues ordered by (real, imag)."""
        return sorted(self.eigenvalues, key=lambda z: (z.real, z.imag))


def balance(a):
    """Diagonal similarity with powers of two that equalizes row/column norms."""
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    scale = np.ones(n)
    off = ~np.eye(n, dtype=bool)
    converged = False
    sweeps = 0
    while not converged and sweeps < BALANCE_SWEEPS:
        converged = True
        sweeps += 1
        for i in range(n):
            # off-diagonal norms taken directly: subtracting |a_ii| leaves ulp residue
            c = np.abs(a[off[:, i], i]).sum()
            r = np.abs(a[i, off[i, :]]).sum()
            if c == 0 or r == 0:
                continue
            f = 1.0
            s = c + r
            while c < r / 2:
                c *= 2
                r /= 2
                f *= 2
            while c >= r * 2:
                c /= 2
                r *= 2
                f /= 2
            if (c + r) < 0.95 * s:
                converged = False
                scale[i] *= f
                a[i, :] /= f
                a[:, i] *= f
    return a, scale


def hessenberg(a):
    """Householder reduction to upper Hessenberg form (similarity)."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        tail = np.abs(x[1:])
        if not tail.any():
            continue
        alpha = np.linalg.norm(x)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # H <- P H P with P = I - 2 v v^*
        h[k + 1:, k:] -= 2 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0
    return h


def _eig2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]], the one closer to d first."""
    tr = 0.5 * (a + d)
    disc = cmath.sqrt(0.25 * (a - d) ** 2 + b * c)
    l1, l2 = tr + disc, tr - disc
    # recover the smaller-magnitude root through the determinant when it is safer
    det = a * d - b * c
    if abs(l1) >= abs(l2) and l1 != 0:
        l2 = det / l1
    elif l2 != 0:
        l1 = det / l2
    if abs(l1 - d) <= abs(l2 - d):
        return l1, l2
    return l2, l1


def _givens(x, y):
    r = (abs(x) ** 2 + abs(y) ** 2) ** 0.5
    if r == 0:
        return np.eye(2, dtype=complex)
    return np.array([[x.conjugate() / r, y.conjugate() / r], [-y / r, x / r]])


def hessenberg_qr(h):
    """Eigenvalues of an upper Hessenberg matrix by shifted QR with deflation.

    Returns ``(eigenvalues, iterations)`` in deflation order.
    """
    h = np.array(h, dtype=complex)
    n = h.shape[0]
    vals = [None] * n
    its = [0] * n
    hi = n - 1
    count = 0
    stalls = 0
    while hi >= 0:
        if hi == 0:
            vals[0] = h[0, 0]
            its[0] = count
            break
        # locate the active block [lo, hi]
        lo = hi
        while lo > 0:
            sub = abs(h[lo, lo - 1])
            if sub <= _EPS * (abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])):
                h[lo, lo - 1] = 0
                break
            lo -= 1
        if lo == hi:
            vals[hi] = h[hi, hi]
            its[hi] = count
            hi -= 1
            count = stalls = 0
            continue
        if lo == hi - 1:
            l1, l2 = _eig2(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
            vals[hi], vals[hi - 1] = l1, l2
            its[hi] = its[hi - 1] = count
            hi -= 2
            count = stalls = 0
            continue
        if count >= ITERATION_CAP:
            done = [v for v in vals if v is not None]
            raise NumericError(f"QR did not deflate row {hi} within {ITERATION_CAP} iterations",
                               partial=done)
        count += 1
        stalls += 1
        if stalls % EXCEPTIONAL_EVERY == 0:
            shift = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * (1 + 0.5j)
        else:
            shift, _ = _eig2(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        _qr_step(h, lo, hi, shift)
    return vals, its


def _qr_step(h, lo, hi, shift):
    """One explicit shifted QR step on the block h[lo:hi+1, lo:hi+1]."""
    blk = h[lo:hi + 1, lo:hi + 1]
    m = blk.shape[0]
    idx = np.arange(m)
    blk[idx, idx] -= shift
    rots = []
    for k in range(m - 1):
        g = _givens(blk[k, k], blk[k + 1, k])
        blk[k:k + 2, k:] = g @ blk[k:k + 2, k:]
        blk[k + 1, k] = 0
        rots.append(g.conj().T)
    for k, gh in enumerate(rots):
        top = min(k + 2, m - 1) + 1
        blk[:top, k:k + 2] = blk[:top, k:k + 2] @ gh
    blk[idx, idx] += shift


def complex_eigenvalues(matrix) -> ComplexSpectrum:
    """All eigenvalues of a dense complex matrix (n <= 2500)."""
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError("matrix must be square")
    n = a.shape[0]
    if n > MAX_DENSE_DIM:
        raise ResourceError(f"dimension {n} exceeds the dense cap {MAX_DENSE_DIM}")
    if n == 0:
        return ComplexSpectrum([], [], [])
    a = a.astype(complex)
    if not np.isfinite(a).all():
        raise ParameterError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(a).sum(axis=1).max()))
    b, _ = balance(a)
    h = hessenberg(b)
    vals, its = hessenberg_qr(h)
    vals = [complex(v) for v in vals]
    trace_res = abs(sum(vals) - np.trace(a))
    sign, logdet = np.linalg.slogdet(a)
    checks = {
        "trace_residual": float(trace_res),
        "trace_ok": bool(trace_res <= 1e-8 * n * scale),
        "scale": scale,
    }
    if sign != 0 and all(v != 0 for v in vals):
        logs = np.log(np.abs(vals)).sum()
        checks["logdet_residual"] = float(abs(logs - logdet))
        checks["logdet_ok"] = bool(abs(logs - logdet) <= 1e-8 * n * max(1.0, abs(logdet)))
    return ComplexSpectrum(vals, [True] * n, its, checks)


def tridiagonal_to_dense(op: TridiagonalOperator) -> np.ndarray:
    if op.n > MAX_DENSE_DIM:
        raise ResourceError(f"dimension {op.n} exceeds the dense cap {MAX_DENSE_DIM}")
    return op.to_dense().astype(complex)


def nearest_eigenvalue(op: TridiagonalOperator, mu0: complex, tol: float = 1e-12,
                       max_iter: int = 50):
    """Eigenvalue of a complex tridiagonal operator closest to ``mu0`` (any size).

    The matrix is replaced by the complex-symmetric tridiagonal with
    off-diagonal ``sqrt(lower * upper)``, which has the same characteristic
    polynomial; left and right eigenvectors then coincide up to transpose and
    the Rayleigh quotient ``v^T A v / v^T v`` converges cubically.
    Returns ``(mu, residual, iterations)``.
    """
    d = np.asarray(op.diag, dtype=complex)
    off = np.sqrt(np.asarray(op.lower, dtype=complex) * np.asarray(op.upper, dtype=complex))
    scale = max(1.0, float(np.abs(d).max() + 2 * np.abs(off).max(initial=0)))

    def apply(v):
        out = d * v
        out[:-1] += off * v[1:]
        out[1:] += off * v[:-1]
        return out

    rng = np.random.default_rng(0)
    v = rng.standard_normal(len(d)) + 0j
    mu = complex(mu0)
    # a few fixed-shift steps first so the quotient starts near the target
    lu = TridiagonalLU(d, off, off, mu)
    for _ in range(3):
        v = lu.solve(v)
        v /= np.linalg.norm(v)
    res = np.inf
    for it in range(1, max_iter + 1):
        av = apply(v)
        mu = complex((v @ av) / (v @ v))
        res = float(np.linalg.norm(av - mu * v) / np.linalg.norm(v))
        if res <= tol * scale:
            return mu, res, it
        lu = TridiagonalLU(d, off, off, mu)
        v = lu.solve(v)
        v /= np.linalg.norm(v)
    raise NumericError(f"Rayleigh iteration near {mu0} did not converge (residual {res:.3e})",
                       partial=(mu, res))
