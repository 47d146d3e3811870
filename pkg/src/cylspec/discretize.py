"""Finite-difference assembly of the 1D mode operators and the 2D guide.

1D operators are ``-d^2/dx^2 + V`` on a uniform grid with Dirichlet walls,
optionally complex-scaled (flux form with the contour Jacobian ``j``) and
conjugated with ``exp(beta s_R)``.  The 2D guide operator comes from a
symmetric discretization of the energy form of the straightened domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, ParameterError
from .model_zoo import (
    PlanarGuideModel,
    ScalingProfile,
    as_scaling_parameter,
    contour_point,
    guide_metric_at,
)

TRIPLET_HEADER = "# cylspec-triplet v1"


@dataclass(frozen=True)
class Grid1D:
    """Interior nodes x_i = x_min + i h, i = 1..n_points; walls at both ends."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ParameterError("a grid needs at least 3 interior points")
        if not self.x_max > self.x_min:
            raise ParameterError("x_max must exceed x_min")

    @classmethod
    def symmetric(cls, L: float, h: float) -> "Grid1D":
        return cls(-L, L, int(round(2 * L / h)) - 1)

    @classmethod
    def half_line(cls, L: float, h: float) -> "Grid1D":
        return cls(0.0, L, int(round(L / h)) - 1)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points + 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(1, self.n_points + 1)

    @property
    def is_symmetric(self) -> bool:
        return math.isclose(self.x_min, -self.x_max)


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Tridiagonal matrix: ``lower[i] = A[i+1, i]``, ``upper[i] = A[i, i+1]``."""

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    grid: Grid1D = None
    provenance: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.diag) - 1):
            raise ContractViolation("off-diagonals must have length len(diag) - 1")
        for arr in (self.diag, self.lower, self.upper):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.diag) or np.iscomplexobj(self.lower) \
            or np.iscomplexobj(self.upper)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.lower, self.upper))

    @property
    def off(self) -> np.ndarray:
        """Off-diagonal of a symmetric operator."""
        if not self.is_symmetric:
            raise ContractViolation("operator is not symmetric; use lower/upper")
        return self.upper

    def matvec(self, v):
        v = np.asarray(v)
        out = self.diag.reshape((-1,) + (1,) * (v.ndim - 1)) * v
        shape = (-1,) + (1,) * (v.ndim - 1)
        out[:-1] = out[:-1] + self.upper.reshape(shape) * v[1:]
        out[1:] = out[1:] + self.lower.reshape(shape) * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        dtype = complex if self.is_complex else float
        a = np.zeros((self.n, self.n), dtype=dtype)
        idx = np.arange(self.n)
        a[idx, idx] = self.diag
        a[idx[:-1], idx[1:]] = self.upper
        a[idx[1:], idx[:-1]] = self.lower
        return a

    def norm_bound(self) -> float:
        """Gershgorin-type bound on the spectral radius."""
        r = np.abs(self.diag).copy()
        r[:-1] += np.abs(self.upper)
        r[1:] += np.abs(self.lower)
        return float(r.max())


def _flux_stencil(h, j_nodes, j_mid):
    """Rows of -(1/j) d/dx (1/j) d/dx on interior nodes.

    ``j_mid[i]`` is the Jacobian at x_i - h/2 for i = 0..n (n+1 values).
    """
    inv_h2 = 1.0 / (h * h)
    diag = inv_h2 / j_nodes * (1.0 / j_mid[1:] + 1.0 / j_mid[:-1])
    upper = -inv_h2 / (j_nodes[:-1] * j_mid[1:-1])
    lower = -inv_h2 / (j_nodes[1:] * j_mid[1:-1])
    return diag, lower, upper


def assemble_mode_operator(model, sigma: float, grid: Grid1D) -> TridiagonalOperator:
    """Real mode operator ``-d^2/dx^2 + V_k`` (threshold at 0).

    ``model`` is anything with ``potential(sigma, x)``; eigenvalues E of the
    result correspond to mu = sigma + E of the full Laplacian.
    """
    n = grid.n_points
    ones = np.ones(n)
    diag, lower, upper = _flux_stencil(grid.h, ones, np.ones(n + 1))
    diag = diag + np.asarray(model.potential(sigma, grid.x), dtype=float)
    return TridiagonalOperator(diag, lower, upper, grid,
                               f"-d2 + V_k, sigma={sigma!r}",
                               {"sigma": sigma, "lambda": 0j})


def _check_deformation(model, profile: ScalingProfile, grid: Grid1D):
    if profile.R < model.c + 1:
        raise ParameterError(f"R={profile.R} must be >= c + 1 = {model.c + 1}")
    reach = max(abs(grid.x_min), abs(grid.x_max))
    if reach <= profile.R + 1 + profile.ramp_width:
        raise ContractViolation("grid ends before the scaling ramp completes")


def assemble_deformed_mode_operator(model, sigma: float, grid: Grid1D,
                                    profile: ScalingProfile, lam) -> TridiagonalOperator:
    """Complex-scaled mode operator ``-(1/j)(d/dx)(1/j)(d/dx) + V(z(x))``.

    ``lam = 0`` returns exactly the real assembly (stored as complex).
    """
    param = as_scaling_parameter(lam)
    if param.lam == 0:
        real = assemble_mode_operator(model, sigma, grid)
        return TridiagonalOperator(real.diag.astype(complex), real.lower.astype(complex),
                                   real.upper.astype(complex), grid, real.provenance,
                                   dict(real.meta))
    _check_deformation(model, profile, grid)
    x = grid.x
    h = grid.h
    z, j_nodes = contour_point(profile, param, x)
    x_mid = np.concatenate([x - h / 2, [x[-1] + h / 2]])
    _, j_mid = contour_point(profile, param, x_mid)
    diag, lower, upper = _flux_stencil(h, j_nodes, j_mid)
    diag = diag + np.asarray(model.potential(sigma, z), dtype=complex)
    return TridiagonalOperator(diag, lower, upper, grid,
                               f"deformed -d2 + V_k, sigma={sigma!r}, lambda={param.lam!r}, "
                               f"R={profile.R!r}",
                               {"sigma": sigma, "lambda": param.lam, "R": profile.R,
                                "ramp_width": profile.ramp_width})


def conjugate_operator(op: TridiagonalOperator, beta: complex,
                       profile: ScalingProfile) -> TridiagonalOperator:
    """Similarity ``D^{-1} A D`` with ``D = diag(exp(beta s_R(|x_i|)))``."""
    if beta == 0:
        return op
    s, _ = profile.s_R(np.abs(op.grid.x))
    # ratios d_{i+1}/d_i computed directly to avoid overflow
    ratio = np.exp(beta * np.diff(s))
    upper = op.upper * ratio
    lower = op.lower / ratio
    meta = dict(op.meta, beta=beta)
    return TridiagonalOperator(op.diag.astype(complex), lower.astype(complex),
                               upper.astype(complex), op.grid,
                               op.provenance + f", conjugated beta={beta!r}", meta)


def write_triplets(matrix, path) -> int:
    """Write a matrix as ``row col re im`` lines (0-based); returns nnz."""
    if isinstance(matrix, TridiagonalOperator):
        n = matrix.n
        rows = np.concatenate([np.arange(n), np.arange(n - 1), np.arange(1, n)])
        cols = np.concatenate([np.arange(n), np.arange(1, n), np.arange(n - 1)])
        vals = np.concatenate([matrix.diag, matrix.upper, matrix.lower]).astype(complex)
    else:
        dense = matrix.to_dense() if hasattr(matrix, "to_dense") else np.asarray(matrix)
        n = dense.shape[0]
        rows, cols = np.nonzero(dense)
        vals = dense[rows, cols].astype(complex)
    order = np.lexsort((cols, rows))
    with open(path, "w") as fh:
        fh.write(f"{TRIPLET_HEADER} n={n} nnz={len(order)}\n")
        for k in order:
            v = vals[k]
            fh.write(f"{rows[k]} {cols[k]} {float(v.real)!r} {float(v.imag)!r}\n")
    return len(order)


def read_triplets(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        n = int(header[3].split("=")[1])
        a = np.zeros((n, n), dtype=complex)
        for line in fh:
            i, j, re, im = line.split()
            a[int(i), int(j)] = complex(float(re), float(im))
    return a


# ---------------------------------------------------------------------------
# 2D guide
# ---------------------------------------------------------------------------

SECTORS = ("full", "even", "odd")
BOUNDARIES = ("dirichlet", "neumann")


@dataclass(frozen=True)
class Grid2D:
    """Straightened guide grid: s in [-lx, lx] (Dirichlet), y per sector.

    ``nx`` interior axial nodes; ``ny`` unknown rows across the guide.
    """

    lx: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ParameterError("nx and ny must be positive")
        if not self.lx > 0:
            raise ParameterError("lx must be positive")

    @property
    def hx(self) -> float:
        return 2 * self.lx / (self.nx + 1)

    @property
    def s(self) -> np.ndarray:
        """All axial nodes including the two wall nodes."""
        return -self.lx + self.hx * np.arange(self.nx + 2)

    def y_layout(self, boundary: str, sector: str):
        """(y nodes incl. walls, unknown mask, row weights, hy)."""
        if sector == "full":
            if boundary == "dirichlet":
                m = self.ny + 1
            else:
                m = self.ny - 1
            y = -1 + 2.0 * np.arange(m + 1) / m
            hy = 2.0 / m
            unknown = np.ones(m + 1, bool)
            if boundary == "dirichlet":
                unknown[[0, -1]] = False
        else:
            m = self.ny - 1 + (sector == "odd") + (boundary == "dirichlet")
            y = np.arange(m + 1) / m
            hy = 1.0 / m
            unknown = np.ones(m + 1, bool)
            if sector == "odd":
                unknown[0] = False
            if boundary == "dirichlet":
                unknown[-1] = False
        if m < 1:
            raise ParameterError("too few rows across the guide")
        weight = np.ones(m + 1)
        weight[[0, -1]] = 0.5
        return y, unknown, weight, hy


@dataclass(frozen=True, eq=False)
class BandedOperator2D:
    """Symmetric banded matrix in lower storage: ``ab[k, j] = A[j + k, j]``."""

    ab: np.ndarray
    grid: Grid2D
    boundary: str
    sector: str
    model: PlanarGuideModel = None
    mass: np.ndarray = None

    @property
    def n(self) -> int:
        return self.ab.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.ab.shape[0] - 1

    def to_dense(self) -> np.ndarray:
        n = self.n
        a = np.zeros((n, n))
        for k in range(self.bandwidth + 1):
            idx = np.arange(n - k)
            a[idx + k, idx] = self.ab[k, :n - k]
            a[idx, idx + k] = self.ab[k, :n - k]
        return a

    def matvec(self, v):
        v = np.asarray(v)
        shape = (-1,) + (1,) * (v.ndim - 1)
        out = self.ab[0].reshape(shape) * v
        n = self.n
        for k in range(1, self.bandwidth + 1):
            band = self.ab[k, :n - k].reshape(shape)
            out[k:] += band * v[:n - k]
            out[:n - k] += band * v[k:]
        return out

    def norm_bound(self) -> float:
        r = np.abs(self.ab[0]).copy()
        n = self.n
        for k in range(1, self.bandwidth + 1):
            r[k:] += np.abs(self.ab[k, :n - k])
            r[:n - k] += np.abs(self.ab[k, :n - k])
        return float(r.max())


def assemble_guide_operator(model: PlanarGuideModel, grid2d: Grid2D,
                            boundary: str = "dirichlet",
                            sector: str = "full") -> BandedOperator2D:
    """Guide Laplacian in divergence form on the straightened strip.

    Energy form  sum sqrt(g) grad(u)^T g^{-1} grad(u)  with edge differences
    for the diagonal coefficients and cell-averaged gradients for the mixed
    one; lumped trapezoid mass ``sqrt(g)``.  The returned matrix is
    ``M^{-1/2} K M^{-1/2}``, symmetric with bandwidth ``ny + 1``.
    Walls with the Neumann condition (and the symmetry line of the even
    sector) enter as natural boundaries of the form.
    """
    if boundary not in BOUNDARIES:
        raise ParameterError(f"boundary must be one of {BOUNDARIES}")
    if sector not in SECTORS:
        raise ParameterError(f"sector must be one of {SECTORS}")
    s = grid2d.s
    hx = grid2d.hx
    y, unknown_y, wy, hy = grid2d.y_layout(boundary, sector)
    nxn, nyn = len(s), len(y)
    unknown = np.zeros((nxn, nyn), bool)
    unknown[1:-1, :] = unknown_y[None, :]
    index = -np.ones((nxn, nyn), dtype=np.int64)
    index[unknown] = np.arange(unknown.sum())
    ny_unknown = int(unknown_y.sum())
    n = int(unknown.sum())

    pairs_p, pairs_q, coefs = [], [], []

    # axial edges (i, j)-(i+1, j), coefficient at the edge midpoint
    sm = 0.5 * (s[:-1] + s[1:])
    met = guide_metric_at(model, sm[:, None], y[None, :])
    cxx = met.sqrt_det * met.inv00
    a = wy[None, :] * hy / hx * cxx
    pairs_p.append(index[:-1, :].ravel())
    pairs_q.append(index[1:, :].ravel())
    coefs.append(a.ravel())

    # transverse edges (i, j)-(i, j+1)
    ymid = 0.5 * (y[:-1] + y[1:])
    met = guide_metric_at(model, s[:, None], ymid[None, :])
    cyy = met.sqrt_det * met.inv11
    a = hx / hy * cyy
    pairs_p.append(index[:, :-1].ravel())
    pairs_q.append(index[:, 1:].ravel())
    coefs.append(a.ravel())

    # mixed term on cells: (c/2) [(u_a - u_d)^2 - (u_b - u_c)^2]
    met = guide_metric_at(model, sm[:, None], ymid[None, :])
    cxy = (met.sqrt_det * met.inv01).ravel()
    ia = index[:-1, :-1].ravel()
    ib = index[1:, :-1].ravel()
    ic = index[:-1, 1:].ravel()
    idd = index[1:, 1:].ravel()
    pairs_p += [ia, ib]
    pairs_q += [idd, ic]
    coefs += [0.5 * cxy, -0.5 * cxy]

    p = np.concatenate(pairs_p)
    q = np.concatenate(pairs_q)
    c = np.concatenate(coefs)
    bw = ny_unknown + 1
    ab = np.zeros((bw + 1, n))
    # diagonal contributions from every edge touching an unknown node
    for node in (p, q):
        keep = node >= 0
        np.add.at(ab[0], node[keep], c[keep])
    both = (p >= 0) & (q >= 0)
    lo = np.minimum(p[both], q[both])
    hi = np.maximum(p[both], q[both])
    off = hi - lo
    if off.size and off.max() > bw:
        raise ContractViolation("stencil exceeds the declared bandwidth")
    np.add.at(ab, (off, lo), -c[both])

    f, _, _ = model.profile(s)
    mass = (hx * hy * f[:, None] * wy[None, :])[unknown]
    scale = 1.0 / np.sqrt(mass)
    for k in range(bw + 1):
        ab[k, :n - k] *= scale[k:] * scale[:n - k]
    return BandedOperator2D(ab, grid2d, boundary, sector, model, mass)
