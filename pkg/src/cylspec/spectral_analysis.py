"""From raw spectra to checkable statements.

Essential-spectrum curves of the deformed operators, persistence of
discrete eigenvalues under deformation and conjugation, tail-decay fits,
accumulation counts below a threshold and numerical-range sector fits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .discretize import (
    Grid1D,
    assemble_deformed_mode_operator,
    assemble_mode_operator,
    conjugate_operator,
)
from .eig_complex import complex_eigenvalues, nearest_eigenvalue, tridiagonal_to_dense
from .eig_real import SpectralWindow, eigenvalues_in_window, sturm_counts
from .errors import InsufficientDataError, ParameterError, PropertyViolation
from .model_zoo import ScalingProfile, as_scaling_parameter, build_threshold_ladder

STABLE_DRIFT = 1e-4
DECAY_POTENTIAL_FRACTION = 0.05
DECAY_FLOOR = 1e3 * np.finfo(float).eps
MIN_FIT_POINTS = 20
SECTOR_MARGIN = 1e-8
GOLDEN = (1 + math.sqrt(5)) / 2


# ---------------------------------------------------------------------------
# Essential-spectrum geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EssentialCurve:
    """mu(xi) = nu - (1 + lam)^-2 (beta + i xi)^2."""

    nu: float
    lam: complex = 0j
    beta: complex = 0j

    @property
    def q(self) -> complex:
        return (1 + complex(self.lam)) ** -2

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.nu - self.q * (self.beta + 1j * xi) ** 2

    @property
    def direction(self) -> complex:
        """Unit direction of the ray (beta = 0)."""
        q = self.q
        return q / abs(q)

    def distance(self, mu) -> np.ndarray:
        """Euclidean distance from each point to the curve."""
        mu = np.atleast_1d(np.asarray(mu, dtype=complex))
        if self.beta == 0:
            d = self.direction
            t = np.maximum((np.conj(d) * (mu - self.nu)).real, 0.0)
            return np.abs(mu - self.nu - t * d)
        # |A + B xi + C xi^2|^2 is a real quartic in xi; its critical points
        # solve a real cubic
        b = complex(self.beta)
        c_ = self.q
        out = np.empty(mu.shape)
        for i, m in enumerate(mu):
            a_ = (self.nu - m) - c_ * b * b
            b_ = -2j * c_ * b
            coeffs = [2 * abs(c_) ** 2, 3 * (b_ * c_.conjugate()).real,
                      (abs(b_) ** 2 + 2 * (c_ * a_.conjugate()).real),
                      (b_ * a_.conjugate()).real]
            roots = np.roots(coeffs)
            xi = roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots))].real
            if xi.size == 0:
                xi = roots.real
            out[i] = np.abs(a_ + b_ * xi + c_ * xi * xi).min()
        return out


def predict_essential_curve(nu: float, lam, beta, xi_grid):
    """Sample the essential-spectrum curve; returns ``(curve, points)``."""
    curve = EssentialCurve(float(nu), complex(lam), complex(beta))
    return curve, curve(xi_grid)


@dataclass
class RayDeviationReport:
    classes: list
    near_real: list
    fraction_near_curve: float
    max_curve_distance: float
    isolated: list
    outliers: list
    tol: float
    real_axis_band: float

    def to_dict(self) -> dict:
        return {
            "fraction_near_curve": self.fraction_near_curve,
            "max_curve_distance": self.max_curve_distance,
            "isolated": [[z.real, z.imag] for z in self.isolated],
            "outliers": len(self.outliers),
            "tol": self.tol,
            "real_axis_band": self.real_axis_band,
        }


def ray_deviation(eigenvalues, curves, real_axis_band: float, tol: float) -> RayDeviationReport:
    """Classify eigenvalues as near-curve, near-real-isolated or outlier.

    ``fraction_near_curve`` is taken over the non-real eigenvalues
    (``|Im| > real_axis_band``); it is 1 when there are none.
    """
    ev = np.asarray(getattr(eigenvalues, "eigenvalues", eigenvalues), dtype=complex)
    if not curves:
        raise ParameterError("at least one curve is needed")
    dist = np.min([c.distance(ev) for c in curves], axis=0) if ev.size else np.empty(0)
    near_real = np.abs(ev.imag) <= real_axis_band
    near_curve = dist <= tol
    classes = []
    for nr, nc in zip(near_real, near_curve):
        if nc:
            classes.append("near-curve")
        elif nr:
            classes.append("near-real-isolated")
        else:
            classes.append("outlier")
    nonreal = ~near_real
    frac = float(near_curve[nonreal].mean()) if nonreal.any() else 1.0
    maxd = float(dist[near_curve].max()) if near_curve.any() else 0.0
    iso = sorted((complex(z) for z, c in zip(ev, classes) if c == "near-real-isolated"),
                 key=lambda z: (z.real, z.imag))
    outl = [complex(z) for z, c in zip(ev, classes) if c == "outlier"]
    return RayDeviationReport(classes, near_real.tolist(), frac, maxd, iso, outl,
                              tol, real_axis_band)


# ---------------------------------------------------------------------------
# Persistence under deformation and conjugation
# ---------------------------------------------------------------------------

@dataclass
class PersistenceEntry:
    lam: complex
    beta: complex
    mu: complex
    drift: float
    imag: float
    passed: bool


@dataclass
class PersistenceReport:
    mu_candidate: float
    tol: float
    entries: list
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_drift(self) -> float:
        return max((e.drift for e in self.entries), default=0.0)

    @property
    def max_imag(self) -> float:
        return max((e.imag for e in self.entries), default=0.0)

    @property
    def spread(self) -> float:
        """Largest pairwise distance between the tracked eigenvalues."""
        mus = [e.mu for e in self.entries]
        return max((abs(a - b) for a in mus for b in mus), default=0.0)


def persistence_tolerance(h: float, gap: float, L: float) -> float:
    return 10 * (h * h + math.exp(-2 * math.sqrt(gap) * L))


def persistence_check(model, sigma: float, mu_candidate: float, lambda_list,
                      grid: Grid1D, profile: ScalingProfile, beta=0.0,
                      tol: float = None) -> PersistenceReport:
    """Track ``mu_candidate`` (an eigenvalue of the real mode operator) through
    the deformed, optionally conjugated, operators.

    All scaling parameters are validated before any solve.
    """
    params = [as_scaling_parameter(lam) for lam in lambda_list]
    if not mu_candidate < 0:
        raise ParameterError("mu_candidate must lie below the threshold 0 of the mode operator")
    gap = -mu_candidate
    if abs(beta) >= math.sqrt(gap):
        raise ParameterError(f"|beta| must be below sqrt(gap) = {math.sqrt(gap):.6g}")
    L = max(abs(grid.x_min), abs(grid.x_max))
    if tol is None:
        tol = persistence_tolerance(grid.h, gap, L)
    entries, failures = [], []
    for p in params:
        op = assemble_deformed_mode_operator(model, sigma, grid, profile, p)
        if beta != 0:
            op = conjugate_operator(op, beta, profile)
        mu, _, _ = nearest_eigenvalue(op, mu_candidate)
        drift = abs(mu - mu_candidate)
        entry = PersistenceEntry(p.lam, complex(beta), mu, drift, abs(mu.imag),
                                 drift <= tol and abs(mu.imag) <= tol)
        entries.append(entry)
        if not entry.passed:
            failures.append(entry)
    return PersistenceReport(mu_candidate, tol, entries, failures)


def multiset_distance(a, b) -> float:
    """Bottleneck-style distance between two eigenvalue multisets.

    Pairs are chosen by an optimal assignment on |a_i - b_j|; the largest
    paired distance is returned.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return math.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def conjugation_invariance(op, beta, profile: ScalingProfile) -> float:
    """Multiset distance between the spectra of ``op`` and its conjugate."""
    base = complex_eigenvalues(tridiagonal_to_dense(op)).eigenvalues
    conj = complex_eigenvalues(tridiagonal_to_dense(conjugate_operator(op, beta, profile)))
    return multiset_distance(base, conj.eigenvalues)


# ---------------------------------------------------------------------------
# Decay fits
# ---------------------------------------------------------------------------

@dataclass
class DecayFit:
    gamma_hat: float
    window: tuple
    r2: float
    bound: float
    log_c: float
    points: int

    @property
    def accepted(self) -> bool:
        return self.r2 >= 0.99

    @property
    def relative_error(self) -> float:
        return abs(self.gamma_hat - self.bound) / abs(self.bound)


def decay_window(x, psi, potential, gap: float, wall: float = None):
    """Admissible fit window on the right tail.

    Starts where ``|V| < 0.05 gap`` holds for good, stops where ``|psi|``
    drops to ``1e3 eps`` of its peak or ``10/sqrt(gap)`` before the wall.
    """
    x = np.asarray(x, dtype=float)
    amp = np.abs(np.asarray(psi))
    v = np.abs(np.asarray(potential))
    bad = np.nonzero(v >= DECAY_POTENTIAL_FRACTION * gap)[0]
    start = max(bad[-1] + 1 if bad.size else 0, int(np.argmax(amp)))
    start = max(start, int(np.searchsorted(x, 0.0)))
    floor = DECAY_FLOOR * amp.max()
    below = np.nonzero(amp[start:] <= floor)[0]
    stop = start + below[0] if below.size else len(x)
    if wall is not None:
        stop = min(stop, int(np.searchsorted(x, wall - 10 / math.sqrt(gap), side="right")))
    return start, stop


def fit_decay_rate(x, psi, mu: float, gap: float, potential,
                   window=None, wall: float = None) -> DecayFit:
    """Least-squares slope of ``log|psi|`` over the admissible window."""
    if not gap > 0:
        raise ParameterError("gap must be positive")
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi)
    if window is None:
        start, stop = decay_window(x, psi, potential, gap, wall)
    else:
        start = int(np.searchsorted(x, window[0]))
        stop = int(np.searchsorted(x, window[1], side="right"))
    if stop - start < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"fit window holds {max(stop - start, 0)} points (< {MIN_FIT_POINTS})")
    xs = x[start:stop]
    ys = np.log(np.abs(psi[start:stop]))
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(((ys - pred) ** 2).sum())
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), (float(xs[0]), float(xs[-1])), r2, -math.sqrt(gap),
                    float(intercept), int(stop - start))


def window_doubling(x, psi, mu: float, gap: float, potential, wall: float = None):
    """Fits on the first half of the admissible window and on all of it."""
    start, stop = decay_window(x, psi, potential, gap, wall)
    mid = start + (stop - start) // 2
    x = np.asarray(x, dtype=float)
    half = fit_decay_rate(x, psi, mu, gap, potential, (x[start], x[mid - 1]))
    full = fit_decay_rate(x, psi, mu, gap, potential, (x[start], x[stop - 1]))
    return half, full


# ---------------------------------------------------------------------------
# Accumulation
# ---------------------------------------------------------------------------

@dataclass
class AccumulationReport:
    threshold: float
    epsilon: float
    sweep: str
    parameters: list
    counts: list
    eigenvalues: list
    above: list
    violations: list
    below_only: bool

    @property
    def monotone(self) -> bool:
        return all(b >= a for a, b in zip(self.counts, self.counts[1:]))

    def to_rows(self):
        return [(p, c) for p, c in zip(self.parameters, self.counts)]


def _window_values(op, lo, hi):
    return eigenvalues_in_window(op, SpectralWindow(lo, hi)).eigenvalues


def _count_below(op, epsilon):
    d = np.asarray(op.diag, float)
    e = np.asarray(op.off, float)
    c = sturm_counts(d, e, [-epsilon, 0.0])
    # strictly inside (-eps, 0): eigenvalues at exactly -eps are excluded
    lo = sturm_counts(d, e, [np.nextafter(-epsilon, np.inf)])[0]
    return int(c[1] - lo)


def accumulation_scan(model, epsilon: float, sweep: str, values, *, h: float,
                      k: int = None, L: float = None) -> AccumulationReport:
    """Count mode eigenvalues in ``(-eps, 0)`` over a sweep in ``L`` or in ``k``.

    Eigenvalues in ``(0, eps)`` that move by less than a relative 1e-4 when
    the box length doubles are reported as violations (a genuine eigenvalue
    above the threshold).  Thresholds refer to the full Laplacian:
    ``nu = sigma_k``, the mode operator's threshold being 0.
    """
    if sweep not in ("L", "k"):
        raise ParameterError("sweep must be 'L' or 'k'")
    values = list(values)
    kmax = max(values) if sweep == "k" else k
    if kmax is None or kmax < 1:
        raise ParameterError("a positive mode index k is required")
    ladder = build_threshold_ladder(model.cross_section, int(kmax) + 1)
    gaps = np.diff(ladder.values)
    if gaps.size and not epsilon < gaps.min() / 2:
        raise ParameterError(f"epsilon must be below half the smallest ladder gap "
                             f"({gaps.min() / 2:.6g})")
    counts, eigs, above, violations = [], [], [], []
    thresholds = []
    for val in values:
        kk = int(val) if sweep == "k" else int(k)
        LL = float(val) if sweep == "L" else float(L)
        sigma = _mode_sigma(ladder, kk)
        thresholds.append(sigma)
        op = assemble_mode_operator(model, sigma, Grid1D.symmetric(LL, h))
        below = _window_values(op, -epsilon, 0.0)
        below = [b for b in below if -epsilon < b < 0]
        counts.append(_count_below(op, epsilon))
        eigs.append(below)
        up = [a for a in _window_values(op, 0.0, epsilon) if 0 < a < epsilon]
        above.append(up)
        if up:
            # box levels (j pi / 2L)^2 recur exactly when L doubles, so a level
            # must also survive a non-commensurate length to count as stable
            refs = []
            for factor in (2.0, GOLDEN):
                longer = assemble_mode_operator(model, sigma, Grid1D.symmetric(factor * LL, h))
                refs.append(np.array(_window_values(longer, 0.0, epsilon)))
            for a in up:
                if all(r.size and np.min(np.abs(r - a)) < STABLE_DRIFT * a for r in refs):
                    violations.append((val, a))
    below_only = all(b < 0 for row in eigs for b in row)
    threshold = thresholds[0] if len(set(thresholds)) == 1 else float("nan")
    return AccumulationReport(threshold, epsilon, sweep, values, counts, eigs, above,
                              violations, below_only)


def _mode_sigma(ladder, k: int) -> float:
    """sigma_k counted by distinct thresholds, k = 1 the lowest."""
    vals = ladder.values
    if k > len(vals):
        raise ParameterError(f"ladder holds only {len(vals)} thresholds")
    return vals[k - 1]


# ---------------------------------------------------------------------------
# Sectoriality
# ---------------------------------------------------------------------------

@dataclass
class SectorFit:
    a: float
    theta: float
    samples: int
    min_real: float


def rayleigh_samples(matrix, samples: int, seed: int = 0) -> np.ndarray:
    """Rayleigh quotients v* A v / v* v on seeded random vectors.

    Half of the vectors are smoothed by cumulative summation so that the
    low-frequency end of the numerical range is sampled too.
    """
    a = np.asarray(matrix)
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, samples)) + 1j * rng.standard_normal((n, samples))
    half = samples // 2
    v[:, :half] = np.cumsum(v[:, :half], axis=0)
    v[:, :half] -= np.linspace(0, 1, n)[:, None] * v[-1:, :half]
    av = a @ v
    q = np.einsum("ij,ij->j", v.conj(), av) / np.einsum("ij,ij->j", v.conj(), v).real
    if np.array_equal(a, a.conj().T):
        # Hermitian input: the quotients are real, drop the rounding residue
        q = q.real + 0j
    return q


def numerical_range_sector(matrix, samples: int = 400, seed: int = 0) -> SectorFit:
    """Fit a sector ``|arg(q + a)| <= theta`` around sampled Rayleigh quotients.

    ``a = 2 max(0, -min Re q)`` keeps every shifted sample in the open right
    half-plane whenever ``min Re q < 0``; ``theta`` is the widest sampled
    angle.  ``theta >= pi/2`` (up to 1e-8) is a property violation.
    """
    if samples < 100:
        raise ParameterError("samples must be at least 100")
    q = rayleigh_samples(matrix, samples, seed)
    min_re = float(q.real.min())
    a = 2 * max(0.0, -min_re)
    theta = float(np.abs(np.angle(q + a)).max())
    if theta >= math.pi / 2 - SECTOR_MARGIN:
        raise PropertyViolation(f"no sector with theta < pi/2 (fitted theta = {theta:.12g})")
    return SectorFit(a, theta, samples, min_re)
