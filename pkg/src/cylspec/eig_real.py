"""Real symmetric eigensolvers.

* Sturm-sequence counting and bisection for symmetric tridiagonal matrices,
* inverse iteration with Rayleigh-quotient refinement,
* Householder tridiagonalization, used as a dense oracle,
* banded LDL^T factorization, inertia counts and shift-invert subspace
  iteration for the 2D guide operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._tridiag import TridiagonalLU
from .discretize import BandedOperator2D, TridiagonalOperator
from .errors import ContractViolation, NumericError, ParameterError, ResourceError

MAX_WINDOW_EIGENVALUES = 10 ** 6
RESIDUAL_TOL = 1e-8

_SAFMIN = np.finfo(float).tiny


@dataclass(frozen=True)
class SpectralWindow:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ParameterError("window bounds must be finite")
        if not self.lo < self.hi:
            raise ParameterError("window needs lo < hi")


@dataclass
class SpectrumResult:
    eigenvalues: list
    eigenvectors: np.ndarray = None
    residuals: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)


def _symmetric_parts(op):
    if isinstance(op, TridiagonalOperator):
        if op.is_complex or not op.is_symmetric:
            raise ContractViolation("Sturm counting needs a real symmetric operator")
        return np.asarray(op.diag, float), np.asarray(op.off, float)
    d, e = op
    return np.asarray(d, float), np.asarray(e, float)


def default_tolerance(op) -> float:
    d, e = _symmetric_parts(op)
    bound = np.abs(d).max(initial=0.0)
    if len(e):
        bound += 2 * np.abs(e).max()
    return 1e-10 * max(1.0, bound)


def _gershgorin(d, e):
    r = np.zeros_like(d)
    r[:-1] += np.abs(e)
    r[1:] += np.abs(e)
    return float((d - r).min()), float((d + r).max())


def sturm_counts(d, e, shifts) -> np.ndarray:
    """Number of eigenvalues strictly below each shift (vectorized over shifts)."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    e2 = np.asarray(e, float) ** 2
    pivmin = _SAFMIN * max(1.0, float(e2.max(initial=0.0)))
    count = np.zeros(shifts.shape, dtype=np.int64)
    # tiny pivots are pushed to +/-pivmin; an exact zero counts as positive,
    # which keeps an eigenvalue sitting exactly at the shift out of the count
    q = d[0] - shifts
    q = np.where(np.abs(q) < pivmin, np.where(q < 0, -pivmin, pivmin), q)
    count += q < 0
    for i in range(1, len(d)):
        q = d[i] - shifts - e2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, np.where(q < 0, -pivmin, pivmin), q)
        count += q < 0
    return count


def sturm_count(op, shift: float) -> int:
    """Number of eigenvalues of a real symmetric tridiagonal strictly below ``shift``."""
    d, e = _symmetric_parts(op)
    return int(sturm_counts(d, e, [shift])[0])


def _bisect_indices(d, e, indices, lo, hi, tol):
    """Bisection for the eigenvalues with the given 0-based ``indices``."""
    indices = np.asarray(indices, dtype=np.int64)
    a = np.full(indices.shape, float(lo))
    b = np.full(indices.shape, float(hi))
    while True:
        width = b - a
        active = width > tol
        if not active.any():
            break
        mid = 0.5 * (a + b)
        # stop when the midpoint no longer splits the interval in floating point
        stuck = (mid <= a) | (mid >= b)
        active &= ~stuck
        if not active.any():
            break
        c = sturm_counts(d, e, mid[active])
        upper = c > indices[active]
        aa = a[active]
        bb = b[active]
        bb[upper] = mid[active][upper]
        aa[~upper] = mid[active][~upper]
        a[active] = aa
        b[active] = bb
    return 0.5 * (a + b)


def eigenvalues_in_window(op, window: SpectralWindow, tol: float = None) -> SpectrumResult:
    """All eigenvalues in ``(lo, hi]``, each to within ``tol``."""
    d, e = _symmetric_parts(op)
    if tol is None:
        tol = default_tolerance((d, e))
    if not tol > 0:
        raise ParameterError("tol must be positive")
    glo, ghi = _gershgorin(d, e)
    lo = max(window.lo, glo - 1.0)
    hi = min(window.hi, ghi + 1.0)
    meta = {"window": (window.lo, window.hi), "tol": tol, "n": len(d)}
    if isinstance(op, TridiagonalOperator) and op.grid is not None:
        meta.update(h=op.grid.h, x_min=op.grid.x_min, x_max=op.grid.x_max)
    if lo >= hi:
        return SpectrumResult([], metadata=meta)
    c_lo, c_hi = sturm_counts(d, e, [np.nextafter(lo, np.inf), np.nextafter(hi, np.inf)])
    if window.lo < glo - 1.0:
        c_lo = 0
    count = int(c_hi - c_lo)
    if count > MAX_WINDOW_EIGENVALUES:
        raise ResourceError(f"window holds {count} eigenvalues (cap {MAX_WINDOW_EIGENVALUES})")
    if count == 0:
        return SpectrumResult([], metadata=meta)
    vals = _bisect_indices(d, e, np.arange(c_lo, c_hi), lo, hi, tol)
    meta["count"] = count
    return SpectrumResult(sorted(vals.tolist()), metadata=meta)


def inverse_iteration(op: TridiagonalOperator, mu_approx: float, tol: float = None,
                      max_iter: int = 30, cluster_check: bool = True):
    """Eigenpair nearest ``mu_approx`` of a real symmetric tridiagonal operator.

    Returns ``(mu, v, residual)``; ``v`` is normalized so that
    ``h * sum(v**2) = 1`` when the operator carries a grid.
    """
    d, e = _symmetric_parts(op)
    if tol is None:
        tol = default_tolerance((d, e))
    if cluster_check:
        c = sturm_counts(d, e, [mu_approx - 10 * tol, mu_approx + 10 * tol])
        if c[1] - c[0] > 1:
            raise NumericError(
                f"{int(c[1] - c[0])} eigenvalues within 10*tol of {mu_approx}; "
                "refusing to pick one of a cluster")
    scale = max(1.0, float(np.abs(d).max() + 2 * np.abs(e).max(initial=0)))
    floor = 4 * np.finfo(float).eps * scale
    rng = np.random.default_rng(0)
    v = rng.standard_normal(len(d))
    v /= np.linalg.norm(v)
    mu = shift = float(mu_approx)
    res = prev = np.inf
    lu = TridiagonalLU(d, e, e, shift)
    refined = 0
    for it in range(max_iter):
        y = lu.solve(v)
        v = y / np.linalg.norm(y)
        av = _tri_matvec(d, e, v)
        mu = float(v @ av)
        res = float(np.linalg.norm(av - mu * v))
        if res <= floor:
            break
        if res > 0.5 * prev and res <= RESIDUAL_TOL * scale:
            # stagnating: refine the shift with the Rayleigh quotient, twice at most
            if refined == 2:
                break
            refined += 1
            lu = TridiagonalLU(d, e, e, mu)
        prev = res
    if not res <= RESIDUAL_TOL * scale:
        raise NumericError(f"inverse iteration did not converge (residual {res:.3e})",
                           partial=(mu, v, res))
    h = op.grid.h if isinstance(op, TridiagonalOperator) and op.grid is not None else 1.0
    k = int(np.argmax(np.abs(v)))
    v = v * np.sign(v[k]) / math.sqrt(h)
    return mu, v, res


def refine_tail(op, mu: float, v) -> np.ndarray:
    """Recompute the right tail of an eigenvector to full relative accuracy.

    From the peak of ``|v|`` to the right wall the three-term recurrence is
    run backwards from the wall as a ratio recursion; the growing direction is
    the stable one, so entries far below ``eps * max|v|`` stay meaningful.
    """
    d, e = _symmetric_parts(op)
    v = np.array(v, dtype=float)
    n = len(d)
    p = int(np.argmax(np.abs(v)))
    if p >= n - 1 or np.any(e[p:] == 0):
        return v
    # rho[i] = v[i-1] / v[i]
    rho = np.empty(n)
    rho[n - 1] = -(d[n - 1] - mu) / e[n - 2]
    for i in range(n - 2, p, -1):
        rho[i] = -((d[i] - mu) + e[i] / rho[i + 1]) / e[i - 1]
    tail = np.cumprod(1.0 / rho[p + 1:])
    v[p + 1:] = v[p] * tail
    return v


def _tri_matvec(d, e, v):
    out = d * v
    out[:-1] += e * v[1:]
    out[1:] += e * v[:-1]
    return out


def eigenpairs_in_window(op: TridiagonalOperator, window: SpectralWindow,
                         tol: float = None) -> SpectrumResult:
    """Bisection for eigenvalues, inverse iteration for their vectors."""
    res = eigenvalues_in_window(op, window, tol)
    vecs, resid, vals = [], [], []
    for mu in res.eigenvalues:
        m, v, r = inverse_iteration(op, mu, res.metadata.get("tol", tol))
        vals.append(m)
        vecs.append(v)
        resid.append(r)
    vectors = np.array(vecs).T if vecs else None
    return SpectrumResult(vals, vectors, resid, res.metadata)


# ---------------------------------------------------------------------------
# Dense oracle
# ---------------------------------------------------------------------------

def householder_tridiagonal(a):
    """Reduce a real symmetric matrix to tridiagonal form; returns (d, e)."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ContractViolation("dense oracle needs a symmetric matrix")
    for k in range(n - 2):
        x = a[k + 1:, k]
        alpha = -math.copysign(np.linalg.norm(x), x[0]) if x[0] != 0 else -np.linalg.norm(x)
        if alpha == 0:
            continue
        v = x.copy()
        v[0] -= alpha
        vnorm2 = v @ v
        if vnorm2 == 0:
            continue
        # A <- H A H with H = I - 2 v v^T / (v^T v), on the trailing block
        sub = a[k + 1:, k + 1:]
        p = sub @ v * (2 / vnorm2)
        kk = p - (p @ v) / vnorm2 * v
        sub -= np.outer(v, kk) + np.outer(kk, v)
        a[k + 1:, k] = 0
        a[k, k + 1:] = 0
        a[k + 1, k] = a[k, k + 1] = alpha
    d = np.diag(a).copy()
    e = np.diag(a, 1).copy()
    return d, e


def dense_symmetric_eigenvalues(a, tol: float = None) -> np.ndarray:
    """All eigenvalues of a dense real symmetric matrix (Householder + bisection)."""
    d, e = householder_tridiagonal(a)
    if tol is None:
        tol = 1e-14 * max(1.0, float(np.abs(d).max() + 2 * np.abs(e).max(initial=0)))
    lo, hi = _gershgorin(d, e)
    return _bisect_indices(d, e, np.arange(len(d)), lo - 1, hi + 1, tol)


# ---------------------------------------------------------------------------
# Banded symmetric (2D guide)
# ---------------------------------------------------------------------------

class BandedLDLT:
    """LDL^T of ``A - shift I`` for a symmetric band matrix (no pivoting).

    ``L`` is kept column-wise: ``cols[j]`` holds L[j+1 : j+1+b, j].
    """

    def __init__(self, op: BandedOperator2D, shift: float, breakdown_tol: float = 1e-13):
        ab = op.ab
        n, b = op.n, op.bandwidth
        self.n, self.b = n, b
        scale = max(1.0, op.norm_bound())
        work = np.zeros((b + 1, b + 1))
        # dense trailing window rows/cols j..j+b
        for k in range(b + 1):
            m = min(b + 1, n) - k
            if m <= 0:
                continue
            work[np.arange(k, k + m), np.arange(m)] = ab[k, :m]
        work = np.tril(work) + np.tril(work, -1).T
        work[np.diag_indices(b + 1)] -= shift
        cols = np.zeros((n, b))
        dvals = np.zeros(n)
        for j in range(n):
            dj = work[0, 0]
            if abs(dj) <= breakdown_tol * scale:
                raise NumericError(f"LDL^T breakdown at pivot {j} (shift {shift})")
            lcol = work[1:, 0] / dj
            dvals[j] = dj
            cols[j] = lcol
            work[1:, 1:] -= dj * np.outer(lcol, lcol)
            # slide the window by one
            work[:-1, :-1] = work[1:, 1:]
            nxt = j + b + 1
            if nxt < n:
                new = np.array([ab[nxt - r, r] for r in range(j + 1, nxt)] + [ab[0, nxt] - shift])
                # column for index nxt against rows j+1..j+b
                work[-1, :] = new
                work[:, -1] = new
            else:
                work[-1, :] = 0
                work[:, -1] = 0
        self.cols = cols
        self.d = dvals

    @property
    def negative_count(self) -> int:
        return int((self.d < 0).sum())

    def solve(self, rhs):
        y = np.array(rhs, dtype=float)
        vec = y.ndim == 1
        if vec:
            y = y[:, None]
        n, b = self.n, self.b
        cols = self.cols
        for j in range(n):
            m = min(b, n - 1 - j)
            if m:
                y[j + 1:j + 1 + m] -= np.outer(cols[j, :m], y[j])
        y /= self.d[:, None]
        for j in range(n - 1, -1, -1):
            m = min(b, n - 1 - j)
            if m:
                y[j] -= cols[j, :m] @ y[j + 1:j + 1 + m]
        return y[:, 0] if vec else y


def inertia_count(op: BandedOperator2D, shift: float, retries: int = 3) -> int:
    """Number of eigenvalues below ``shift`` from the LDL^T inertia."""
    scale = max(1.0, op.norm_bound())
    for attempt in range(retries + 1):
        s = shift - attempt * 1e-9 * scale
        try:
            return BandedLDLT(op, s).negative_count
        except NumericError:
            continue
    raise NumericError(f"inertia count failed near shift {shift}")


def lowest_eigenpairs_2d(op: BandedOperator2D, k: int, shift: float, seed: int = 0,
                         tol: float = RESIDUAL_TOL, max_iter: int = 3000,
                         retries: int = 3) -> SpectrumResult:
    """The ``k`` lowest eigenpairs above ``shift`` by shift-invert subspace iteration."""
    if not 1 <= k <= 20:
        raise ParameterError("k must lie in 1..20")
    n = op.n
    k = min(k, n)
    p = min(n, max(2 * k, k + 8))
    scale = max(1.0, op.norm_bound())
    fact = None
    used_shift = shift
    for attempt in range(retries + 1):
        used_shift = shift - attempt * 1e-6 * scale
        try:
            fact = BandedLDLT(op, used_shift)
            break
        except NumericError:
            continue
    if fact is None:
        raise NumericError(f"factorization failed at shift {shift} after {retries} retries")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    x, _ = np.linalg.qr(x)
    theta = vecs = resid = None
    for it in range(1, max_iter + 1):
        y = fact.solve(x)
        x, _ = np.linalg.qr(y)
        ax = op.matvec(x)
        hmat = x.T @ ax
        hmat = 0.5 * (hmat + hmat.T)
        theta, w = np.linalg.eigh(hmat)
        above = theta > used_shift
        order = np.argsort(np.where(above, theta, np.inf))
        theta = theta[order]
        w = w[:, order]
        x = x @ w
        ax = ax @ w
        r = np.linalg.norm(ax[:, :k] - x[:, :k] * theta[:k], axis=0)
        if np.all(r <= tol * scale):
            vecs = x[:, :k]
            resid = r
            break
    else:
        raise NumericError("subspace iteration did not converge",
                           partial=(theta[:k].tolist(), r.tolist()))
    return SpectrumResult(theta[:k].tolist(), vecs, resid.tolist(),
                          {"shift": used_shift, "iterations": it, "block": p, "seed": seed,
                           "nx": op.grid.nx, "ny": op.grid.ny, "lx": op.grid.lx,
                           "sector": op.sector, "boundary": op.boundary})
