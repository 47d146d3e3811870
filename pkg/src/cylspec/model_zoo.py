"""Model catalog: cross-sections, warp profiles, mode potentials, scaling contour.

Everything here is a pure function of its inputs.  Profiles are evaluated in
closed form on the tail ``|x| >= c`` and by an even quartic bridge inside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import (
    ConfigurationError,
    ContractViolation,
    DomainError,
    ParameterError,
    ThresholdError,
)

CROSS_SECTION_KINDS = ("interval-dirichlet", "interval-neumann", "circle")

# Largest admissible sector half-angle for the scaling parameter (< pi/4).
DEFAULT_ALPHA = math.pi / 4 - 0.01


# ---------------------------------------------------------------------------
# Cross-sections and thresholds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossSectionSpec:
    kind: str = "interval-dirichlet"
    extent: float = 1.0
    copies: int = 1

    def __post_init__(self):
        if self.kind not in CROSS_SECTION_KINDS:
            raise ConfigurationError(
                f"unsupported cross-section kind {self.kind!r}; "
                f"expected one of {CROSS_SECTION_KINDS}")
        if not self.extent > 0:
            raise ParameterError(f"extent must be positive, got {self.extent}")
        if int(self.copies) != self.copies or self.copies < 1:
            raise ParameterError(f"copies must be a positive integer, got {self.copies}")


@dataclass(frozen=True)
class ThresholdLadder:
    """Distinct cross-section eigenvalues with multiplicities, increasing."""

    entries: tuple

    def __post_init__(self):
        values = [v for v, _ in self.entries]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ParameterError("threshold values must be strictly increasing")
        if values and values[0] < 0:
            raise ParameterError("thresholds are nonnegative")
        if any(m < 1 for _, m in self.entries):
            raise ParameterError("multiplicities must be positive")

    @property
    def values(self) -> list:
        return [v for v, _ in self.entries]

    @property
    def multiplicities(self) -> list:
        return [m for _, m in self.entries]

    def flattened(self) -> list:
        """Eigenvalues listed with multiplicity (the sigma_k sequence)."""
        out = []
        for v, m in self.entries:
            out.extend([v] * m)
        return out

    def __len__(self):
        return len(self.entries)


def build_threshold_ladder(spec: CrossSectionSpec, count: int) -> ThresholdLadder:
    """First ``count`` distinct eigenvalues of the cross-section Laplacian.

    Intervals are ``[-extent, extent]``; the circle has radius ``extent``.
    Disjoint copies multiply multiplicities and leave values unchanged.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    if not isinstance(spec, CrossSectionSpec):
        raise ConfigurationError(f"unsupported cross-section {spec!r}")
    a = spec.extent
    entries = []
    if spec.kind == "interval-dirichlet":
        for m in range(1, count + 1):
            entries.append(((m * math.pi / (2 * a)) ** 2, 1))
    elif spec.kind == "interval-neumann":
        for m in range(0, count):
            entries.append(((m * math.pi / (2 * a)) ** 2, 1))
    else:
        for m in range(0, count):
            entries.append(((m / a) ** 2, 1 if m == 0 else 2))
    entries = [(v, mult * spec.copies) for v, mult in entries]
    return ThresholdLadder(tuple(entries))


def max_decay_rate(mu: float, ladder: ThresholdLadder) -> float:
    """Distance-to-next-threshold rate ``min_{nu_j > mu} sqrt(nu_j - mu)``."""
    for nu in ladder.values:
        if math.isclose(mu, nu, rel_tol=1e-12, abs_tol=1e-14):
            raise ThresholdError(f"mu={mu} coincides with threshold {nu}")
    above = [nu for nu in ladder.values if nu > mu]
    if not above:
        raise DomainError(f"no threshold of the ladder lies above mu={mu}")
    return math.sqrt(min(above) - mu)


# ---------------------------------------------------------------------------
# Warp profiles
# ---------------------------------------------------------------------------

def _tail(amplitude, delta, power, w):
    """f = (1 + a w^-delta)^power and two derivatives, for Re w > 0.

    Works for real or complex ``w`` (principal branch, analytic in the
    right half plane).  Returns (f, f', f'', u) with u = 1 + a w^-delta.
    """
    wd = w ** (-delta)
    u = 1 + amplitude * wd
    u1 = -amplitude * delta * wd / w
    u2 = amplitude * delta * (delta + 1) * wd / (w * w)
    f = u ** power
    f1 = power * f / u * u1
    f2 = power * (power - 1) * f / (u * u) * u1 * u1 + power * f / u * u2
    return f, f1, f2, u


def _fit_bridge(amplitude, delta, power, c):
    """Even quartic b0 + b2 x^2 + b4 x^4 matching (f, f', f'') at x = c."""
    f0, f1, f2, _ = _tail(amplitude, delta, power, float(c))
    # p'(c) = 2 b2 c + 4 b4 c^3, p''(c) = 2 b2 + 12 b4 c^2
    m = np.array([[2 * c, 4 * c ** 3], [2.0, 12 * c ** 2]])
    b2, b4 = np.linalg.solve(m, [f1, f2])
    b0 = f0 - b2 * c ** 2 - b4 * c ** 4
    return float(b0), float(b2), float(b4)


class _WarpedProfile:
    """Shared machinery: even profile, closed-form tail, quartic bridge."""

    amplitude: float
    delta: float
    c: float
    bridge: tuple

    @property
    def _power(self) -> float:
        raise NotImplementedError

    def _check_common(self):
        if not 0 < self.delta <= 2:
            raise ParameterError(f"delta must lie in (0, 2], got {self.delta}")
        if not self.c > 0:
            raise ParameterError(f"c must be positive, got {self.c}")
        if self.amplitude < 0:
            raise ParameterError(f"amplitude must be nonnegative, got {self.amplitude}")
        object.__setattr__(self, "bridge",
                           _fit_bridge(self.amplitude, self.delta, self._power, self.c))
        probe = np.linspace(0.0, self.c, 257)
        f, _, _ = self.profile(probe)
        if np.any(f <= 0):
            raise ParameterError("bridge polynomial is not positive on |x| < c")

    def profile(self, x):
        """Return (f, f', f'') at real ``x`` (scalar or array)."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        sign = np.where(x < 0, -1.0, 1.0)
        inside = ax < self.c
        w = np.where(inside, self.c, ax)
        f, f1, f2, _ = _tail(self.amplitude, self.delta, self._power, w)
        b0, b2, b4 = self.bridge
        pb = b0 + b2 * ax ** 2 + b4 * ax ** 4
        pb1 = 2 * b2 * ax + 4 * b4 * ax ** 3
        pb2 = 2 * b2 + 12 * b4 * ax ** 2
        f = np.where(inside, pb, f)
        f1 = sign * np.where(inside, pb1, f1)
        f2 = np.where(inside, pb2, f2)
        if f.ndim == 0:
            return float(f), float(f1), float(f2)
        return f, f1, f2

    def complex_profile(self, z):
        """Analytic continuation of (f, f', f'') off the real tail."""
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z.real) < self.c):
            raise ContractViolation(
                "complex arguments must satisfy |Re z| >= c "
                "(the bridge is not continued analytically)")
        sign = np.where(z.real < 0, -1.0, 1.0)
        f, f1, f2, _ = _tail(self.amplitude, self.delta, self._power, sign * z)
        return f, sign * f1, f2


@dataclass(frozen=True)
class SeparableModel(_WarpedProfile):
    """Warped cylinder  dx^2 + f(x)^{4/n} h  with f^{4/n} = 1 + a|x|^-delta.

    ``amplitude = 0`` gives the product metric (f identically 1).
    """

    n: int = 1
    delta: float = 1.0
    c: float = 1.0
    amplitude: float = 1.0
    cross_section: CrossSectionSpec = field(default_factory=CrossSectionSpec)
    bridge: tuple = field(init=False, default=(1.0, 0.0, 0.0), compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        self._check_common()

    @property
    def _power(self) -> float:
        return self.n / 4.0

    def potential(self, sigma, z):
        """Mode potential V = f''/f + (f^{-4/n} - 1) sigma.

        Real ``z`` may lie anywhere; complex ``z`` with nonzero imaginary
        part must stay on the analytic tail ``|Re z| >= c``.
        """
        z = np.asarray(z)
        f, _, f2 = self.profile(np.real(z))
        f = np.asarray(f)
        f2 = np.asarray(f2)
        if np.iscomplexobj(z):
            off_axis = z.imag != 0
            f = f.astype(complex)
            f2 = f2.astype(complex)
            if np.any(off_axis):
                fc, _, f2c = self.complex_profile(z[off_axis])
                f[off_axis] = fc
                f2[off_axis] = f2c
        v = f2 / f + (f ** (-4.0 / self.n) - 1) * sigma
        if np.ndim(v) == 0:
            return v.item()
        return v


@dataclass(frozen=True)
class PlanarGuideModel(_WarpedProfile):
    """Planar guide {|t| <= f(s)} with f(s) = 1 + a|s|^-delta for |s| >= c."""

    delta: float = 1.0
    amplitude: float = 5.0
    c: float = 2.0
    bridge: tuple = field(init=False, default=(1.0, 0.0, 0.0), compare=False)

    def __post_init__(self):
        self._check_common()
        f, _, _ = self.profile(np.linspace(0, self.c, 257))
        if np.any(f < 1 - 1e-12):
            raise ParameterError("guide profile must satisfy f >= 1")

    @property
    def _power(self) -> float:
        return 1.0


@dataclass(frozen=True)
class SquareWell:
    """Compact-support benchmark potential  -depth on |x| < half_width.

    Not one of the warped models; it shares their ``potential``/``c``
    interface so the assembly and the scaling code treat it uniformly.
    """

    depth: float = 5.0
    half_width: float = 2.0

    @property
    def c(self) -> float:
        return self.half_width

    def potential(self, sigma, z):
        z = np.asarray(z)
        r = np.abs(np.real(z))
        v = np.where(r < self.half_width, -float(self.depth), 0.0)
        # a node on the jump takes the mean of both sides (second-order sampling)
        v = np.where(r == self.half_width, -0.5 * float(self.depth), v)
        if np.iscomplexobj(z):
            if np.any((z.imag != 0) & (np.abs(z.real) < self.half_width)):
                raise ContractViolation("complex arguments must satisfy |Re z| >= c")
            v = v.astype(complex)
        return v.item() if v.ndim == 0 else v


Model = Union[SeparableModel, PlanarGuideModel]


def eval_profile(model: Model, x):
    """(f, f', f'') of a warped model at real ``x``."""
    return model.profile(x)


def potential_Vk(model: SeparableModel, sigma: float, z):
    """Mode potential of the separable model at (possibly complex) ``z``."""
    return model.potential(sigma, z)


class GuideMetric(NamedTuple):
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    sqrt_det: np.ndarray
    inv00: np.ndarray
    inv01: np.ndarray
    inv11: np.ndarray


def guide_metric_at(model: PlanarGuideModel, s, y) -> GuideMetric:
    """Pullback of dt^2 + ds^2 under (s, y) -> (s, f(s) y), at axial ``s``."""
    f, f1, _ = model.profile(s)
    y = np.asarray(y, dtype=float)
    g0 = 1 + f1 ** 2 * y ** 2
    g1 = f * f1 * y
    g2 = f ** 2 + 0 * y
    det = f ** 2
    return GuideMetric(g0, g1, g2, f + 0 * y, g2 / det, -g1 / det, g0 / det)


def guide_metric(model: PlanarGuideModel, x, y) -> GuideMetric:
    """Metric coefficients on the end, with end coordinate x (s = x + c)."""
    if np.any(np.abs(np.asarray(y)) > 1):
        raise ContractViolation("cross-section coordinate must satisfy |y| <= 1")
    return guide_metric_at(model, np.asarray(x, dtype=float) + model.c, y)


# ---------------------------------------------------------------------------
# Complex scaling contour
# ---------------------------------------------------------------------------

def _smoothstep5(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


def _smoothstep5_integral(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 4 * (2.5 - 3 * t + t * t)


@dataclass(frozen=True)
class ScalingProfile:
    """Scaling function s: zero up to 1, s' ramps to 1 over ``ramp_width``.

    ``R`` is the onset shift: the contour uses s_R(x) = s(x - R).
    """

    R: float = 3.0
    ramp_width: float = 1.0

    def __post_init__(self):
        if not self.R > 0:
            raise ParameterError(f"R must be positive, got {self.R}")
        if not self.ramp_width > 0:
            raise ParameterError(f"ramp_width must be positive, got {self.ramp_width}")

    def s(self, x):
        """Return (s(x), s'(x))."""
        x = np.asarray(x, dtype=float)
        w = self.ramp_width
        t = (x - 1.0) / w
        ramp = w * _smoothstep5_integral(t)
        val = np.where(t > 1, 0.5 * w + (x - 1.0 - w), ramp)
        der = _smoothstep5(t)
        if val.ndim == 0:
            return float(val), float(der)
        return val, der

    def s_R(self, x):
        return self.s(np.asarray(x, dtype=float) - self.R)


@dataclass(frozen=True)
class ScalingParameter:
    """Complex scaling parameter, validated against |lambda| < sin(alpha)."""

    lam: complex = 0j
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not 0 < self.alpha < math.pi / 4:
            raise ParameterError(f"alpha must lie in (0, pi/4), got {self.alpha}")
        object.__setattr__(self, "lam", complex(self.lam))
        if abs(self.lam) >= self.max_modulus:
            raise ParameterError(
                f"|lambda|={abs(self.lam):.6g} must be below sin(alpha)={self.max_modulus:.6g}")

    @property
    def max_modulus(self) -> float:
        return math.sin(self.alpha)

    def conjugate(self) -> "ScalingParameter":
        return ScalingParameter(self.lam.conjugate(), self.alpha)


def as_scaling_parameter(lam) -> ScalingParameter:
    if isinstance(lam, ScalingParameter):
        return lam
    return ScalingParameter(complex(lam))


def scaling_s(profile: ScalingProfile, x):
    return profile.s(x)


def contour_point(profile: ScalingProfile, lam, x):
    """Point z = x + lambda s_R(x) on the deformed axis and dz/dx.

    Negative ``x`` is treated as the mirror end (odd continuation of z).
    """
    lam = as_scaling_parameter(lam).lam
    x = np.asarray(x, dtype=float)
    sign = np.where(x < 0, -1.0, 1.0)
    s, ds = profile.s_R(np.abs(x))
    z = x + sign * lam * s
    j = 1 + lam * ds
    if np.ndim(z) == 0:
        return complex(z), complex(j)
    return z, j


# ---------------------------------------------------------------------------
# Stabilization at infinity
# ---------------------------------------------------------------------------

@dataclass
class StabilizationReport:
    x: list
    deviation: list
    derivative_deviation: list
    decreasing_beyond_c: bool
    tends_to_zero: bool
    loglog_slope: float

    @property
    def passed(self) -> bool:
        return self.decreasing_beyond_c and self.tends_to_zero


def _end_deviations(model, s):
    """Sup-norm metric deviation from the product and its x-derivative."""
    f, f1, f2 = model.profile(s)
    if isinstance(model, SeparableModel):
        p = 4.0 / model.n
        g2 = f ** p
        dg2 = p * f ** (p - 1) * f1
        return np.abs(g2 - 1), np.abs(dg2)
    # guide: sup over y in [-1, 1] is attained at |y| = 1
    dev = f1 ** 2 + np.abs(f * f1) + np.abs(f ** 2 - 1)
    ddev = np.abs(2 * f1 * f2) + np.abs(f1 ** 2 + f * f2) + np.abs(2 * f * f1)
    return dev, ddev


def validate_stabilization(model: Model, x_probe: Sequence[float]) -> StabilizationReport:
    """Report how the end metric approaches the product metric.

    ``x_probe`` are end coordinates (axial position s = x + c).
    """
    x = np.asarray(x_probe, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ContractViolation("x_probe must be strictly increasing")
    dev, ddev = _end_deviations(model, x + model.c)
    tail = x >= 0
    dt = dev[tail]
    dd = ddev[tail]
    decreasing = bool(np.all(np.diff(dt) <= 0) and np.all(np.diff(dd) <= 0))
    tends = bool(len(dt) == 0 or (dt[-1] <= dt[0] and dd[-1] <= dd[0]))
    slope = float("nan")
    pos = tail & (dev > 0)
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.log(x[pos] + model.c), np.log(dev[pos]), 1)[0])
    return StabilizationReport(x.tolist(), dev.tolist(), ddev.tolist(),
                               decreasing, tends, slope)
