"""Study drivers.  Each returns a ``StudyResult`` holding tables, summaries,
plots and pass/fail flags; writing them to disk is the CLI's job."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..discretize import (
    Grid1D,
    Grid2D,
    assemble_deformed_mode_operator,
    assemble_guide_operator,
    assemble_mode_operator,
)
from ..eig_complex import MAX_DENSE_DIM, complex_eigenvalues, tridiagonal_to_dense
from ..eig_real import (
    RESIDUAL_TOL,
    SpectralWindow,
    dense_symmetric_eigenvalues,
    eigenpairs_in_window,
    eigenvalues_in_window,
    inertia_count,
    inverse_iteration,
    lowest_eigenpairs_2d,
    refine_tail,
    sturm_count,
)
from ..errors import ConfigurationError, ParameterError
from ..model_zoo import (
    CrossSectionSpec,
    PlanarGuideModel,
    ScalingProfile,
    SeparableModel,
    SquareWell,
    as_scaling_parameter,
    build_threshold_ladder,
    max_decay_rate,
)
from ..spectral_analysis import (
    GOLDEN,
    EssentialCurve,
    accumulation_scan,
    conjugation_invariance,
    numerical_range_sector,
    persistence_check,
    ray_deviation,
    window_doubling,
)
from . import plots

SIMILARITY_TOL = 1e-8
REAL_AXIS_TOL = 1e-9
RAY_FRACTION = 0.95
ORACLE_TOL = 1e-9
MAX_ORACLE_UNKNOWNS = 40
PROFILE_POINTS = 2000


@dataclass
class StudyResult:
    kind: str
    tables: dict = field(default_factory=dict)
    summaries: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_model(model_cfg: dict):
    mtype = model_cfg["type"]
    try:
        if mtype == "separable":
            section = CrossSectionSpec(model_cfg["cross_section"], model_cfg["extent"],
                                       model_cfg["copies"])
            return SeparableModel(model_cfg["n"], model_cfg["delta"], model_cfg["c"],
                                  model_cfg["amplitude"], section)
        if mtype == "guide":
            return PlanarGuideModel(model_cfg["delta"], model_cfg["amplitude"], model_cfg["c"])
        return SquareWell(model_cfg["depth"], model_cfg["half_width"])
    except (ParameterError, ValueError) as exc:
        raise ConfigurationError(f"model ({mtype}): {exc}") from None


def mode_sigma(model, k: int) -> float:
    """Cross-section eigenvalue of mode ``k`` (0 for the square-well benchmark)."""
    if isinstance(model, SquareWell):
        return 0.0
    ladder = build_threshold_ladder(model.cross_section, k)
    return ladder.values[k - 1]


def build_grid(num: dict, L: float = None) -> Grid1D:
    L = num["L"] if L is None else L
    try:
        if num["grid"] == "half-line":
            return Grid1D.half_line(L, num["h"])
        return Grid1D.symmetric(L, num["h"])
    except ParameterError as exc:
        raise ConfigurationError(f"numeric.L / numeric.h: {exc}") from None


def _require(model, types, kind):
    if not isinstance(model, types):
        names = ", ".join(t.__name__ for t in types)
        raise ConfigurationError(f"model.type: study {kind!r} needs one of {names}")


def _profile(dfm) -> ScalingProfile:
    return ScalingProfile(dfm["R"], dfm["ramp_width"])


def _scale(op) -> float:
    return max(1.0, op.norm_bound())


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------

def run_thresholds(cfg) -> StudyResult:
    m = cfg.model
    try:
        spec = CrossSectionSpec(m["cross_section"], m["extent"], m["copies"])
    except (ParameterError, ValueError) as exc:
        raise ConfigurationError(f"model.cross_section: {exc}") from None
    ladder = build_threshold_ladder(spec, cfg.numeric["count"])
    rows = [(j, nu, mult) for j, (nu, mult) in enumerate(ladder.entries, start=1)]
    res = StudyResult("thresholds")
    res.tables["thresholds.csv"] = (["j", "nu", "multiplicity"], rows)
    res.summaries["thresholds.json"] = {
        "cross_section": spec.kind, "extent": spec.extent, "copies": spec.copies,
        "values": ladder.values, "multiplicities": ladder.multiplicities,
    }
    vals = ladder.values
    res.flags["strictly_increasing"] = all(b > a for a, b in zip(vals, vals[1:]))
    res.flags["nonnegative"] = all(v >= 0 for v in vals)
    return res


# ---------------------------------------------------------------------------
# real spectrum of a mode operator
# ---------------------------------------------------------------------------

def run_spectrum(cfg) -> StudyResult:
    model = build_model(cfg.model)
    _require(model, (SeparableModel, SquareWell), "spectrum")
    num = cfg.numeric
    sigma = mode_sigma(model, num["k"])
    grid = build_grid(num)
    op = assemble_mode_operator(model, sigma, grid)
    lo = num["window_lo"]
    if lo is None:
        lo = float(np.min(op.diag - 2 / grid.h ** 2)) - 1.0
    hi = num["window_hi"]
    if not lo < hi:
        raise ConfigurationError("numeric.window_lo: must lie below numeric.window_hi")
    window = SpectralWindow(lo, hi)
    pairs = eigenpairs_in_window(op, window, num["tol"])
    scale = _scale(op)
    rows = [(i, e, sigma + e, r) for i, (e, r) in enumerate(zip(pairs.eigenvalues, pairs.residuals))]
    res = StudyResult("spectrum")
    res.tables["eigenvalues.csv"] = (["index", "E", "mu", "residual"], rows)
    count = sturm_count(op, np.nextafter(hi, np.inf)) - sturm_count(op, np.nextafter(lo, np.inf))
    res.flags["count_consistent"] = count == len(pairs.eigenvalues)
    res.flags["residuals_ok"] = all(r <= RESIDUAL_TOL * scale for r in pairs.residuals)
    if pairs.eigenvectors is not None and len(pairs.eigenvalues) > 1:
        gram = grid.h * pairs.eigenvectors.T @ pairs.eigenvectors
        off = np.abs(gram - np.diag(np.diag(gram))).max()
        res.flags["orthogonality_ok"] = bool(off <= 1e-8)
    else:
        res.flags["orthogonality_ok"] = True
    res.summaries["spectrum.json"] = {
        "sigma": sigma, "k": num["k"], "window": [lo, hi], "n": grid.n_points, "h": grid.h,
        "x_min": grid.x_min, "x_max": grid.x_max, "count": len(pairs.eigenvalues),
        "tol": pairs.metadata.get("tol"),
    }
    res.plots["spectrum.svg"] = plots.spectrum_plane(
        [("E", [complex(e) for e in pairs.eigenvalues])], [], "mode-operator eigenvalues")
    return res


# ---------------------------------------------------------------------------
# accumulation
# ---------------------------------------------------------------------------

def run_accumulation(cfg) -> StudyResult:
    model = build_model(cfg.model)
    _require(model, (SeparableModel,), "accumulation")
    num = cfg.numeric
    if num["k_list"]:
        sweep, values = "k", num["k_list"]
    elif num["L_list"]:
        sweep, values = "L", sorted(num["L_list"])
    else:
        raise ConfigurationError("numeric.L_list: give L_list or k_list for an accumulation sweep")
    try:
        rep = accumulation_scan(model, num["epsilon"], sweep, values, h=num["h"],
                                k=num["k"], L=num["L"])
    except ParameterError as exc:
        raise ConfigurationError(f"numeric.epsilon: {exc}") from None
    res = StudyResult("accumulation")
    res.tables["accumulation.csv"] = (["parameter", "count"], rep.to_rows())
    res.tables["accumulation_eigenvalues.csv"] = (
        ["parameter", "index", "E"],
        [(p, i, e) for p, row in zip(rep.parameters, rep.eigenvalues) for i, e in enumerate(row)])
    stable = {(p, a) for p, a in rep.violations}
    res.tables["above_threshold.csv"] = (
        ["parameter", "E", "stable"],
        [(p, a, int((p, a) in stable)) for p, row in zip(rep.parameters, rep.above) for a in row])
    res.summaries["accumulation.json"] = {
        "sweep": sweep, "parameters": rep.parameters, "counts": rep.counts,
        "epsilon": rep.epsilon, "threshold": rep.threshold if math.isfinite(rep.threshold) else None,
        "below_only": rep.below_only, "monotone": rep.monotone,
        "violations": [[p, a] for p, a in rep.violations],
        "h": num["h"], "k": num["k"] if sweep == "L" else None,
        "L": num["L"] if sweep == "k" else None,
    }
    res.flags["below_only"] = rep.below_only
    res.flags["no_stable_above_threshold"] = not rep.violations
    if sweep == "L":
        res.flags["monotone_in_L"] = rep.monotone
    res.plots["accumulation.svg"] = plots.staircase(rep.parameters, rep.counts,
                                                    f"eigenvalues in (-eps, 0), sweep over {sweep}")
    return res


# ---------------------------------------------------------------------------
# decay
# ---------------------------------------------------------------------------

def bound_state(model, sigma, grid, state: int = 0, tol: float = None):
    """(E, refined eigenvector, residual, operator) of the ``state``-th bound state."""
    op = assemble_mode_operator(model, sigma, grid)
    lo = float(np.min(op.diag - 2 / grid.h ** 2)) - 1.0
    found = eigenvalues_in_window(op, SpectralWindow(lo, 0.0), tol).eigenvalues
    found = [e for e in found if e < 0]
    if len(found) <= state:
        raise ConfigurationError(
            f"numeric.state: only {len(found)} bound state(s) below the threshold")
    mu, v, r = inverse_iteration(op, found[state])
    return mu, refine_tail(op, mu, v), r, op


def run_decay(cfg) -> StudyResult:
    model = build_model(cfg.model)
    _require(model, (SeparableModel, SquareWell), "decay")
    num = cfg.numeric
    sigma = mode_sigma(model, num["k"])
    grid = build_grid(num)
    E, v, resid, op = bound_state(model, sigma, grid, num["state"], num["tol"])
    gap = -E
    x = grid.x
    pot = np.asarray(model.potential(sigma, x), dtype=float)
    half, full = window_doubling(x, v, E, gap, pot, wall=grid.x_max)
    res = StudyResult("decay")
    header = ["window", "x0", "x1", "gamma_hat", "bound", "r2", "log_c", "points"]
    rows = [(name, f.window[0], f.window[1], f.gamma_hat, f.bound, f.r2, f.log_c, f.points)
            for name, f in (("half", half), ("full", full))]
    res.tables["decay_fit.csv"] = (header, rows)
    keep = (x >= 0) & (np.abs(v) > 0)
    xs, ys = x[keep], np.log(np.abs(v[keep]))
    stride = max(1, int(math.ceil(len(xs) / PROFILE_POINTS)))
    xs, ys = xs[::stride], ys[::stride]
    res.tables["decay_profile.csv"] = (["x", "log_abs_psi"], list(zip(xs.tolist(), ys.tolist())))
    ladder_rate = None
    if isinstance(model, SeparableModel):
        ladder = build_threshold_ladder(model.cross_section, num["k"] + 1)
        ladder_rate = -max_decay_rate(sigma + E, ladder)
    res.summaries["decay.json"] = {
        "E": E, "mu": sigma + E, "sigma": sigma, "gap": gap, "residual": resid,
        "gamma_hat": full.gamma_hat, "gamma_hat_half": half.gamma_hat,
        "bound": full.bound, "ladder_bound": ladder_rate,
        "window": list(full.window), "r2": full.r2,
    }
    res.flags["fits_accepted"] = half.accepted and full.accepted
    res.flags["rate_within_10pct"] = full.relative_error <= 0.1
    res.flags["window_doubling_stable"] = abs(half.gamma_hat - full.gamma_hat) <= 0.05 * math.sqrt(gap)
    res.flags["residual_ok"] = resid <= RESIDUAL_TOL * _scale(op)
    res.plots["decay.svg"] = plots.decay_plot(
        xs.tolist(), ys.tolist(),
        [("half window", half.gamma_hat, half.log_c, *half.window),
         ("full window", full.gamma_hat, full.log_c, *full.window)])
    return res


# ---------------------------------------------------------------------------
# complex scaling
# ---------------------------------------------------------------------------

def run_scaling(cfg) -> StudyResult:
    model = build_model(cfg.model)
    _require(model, (SeparableModel, SquareWell), "scaling")
    num, dfm = cfg.numeric, cfg.deformation
    if not dfm["lambda"]:
        raise ConfigurationError("deformation.lambda: at least one scaling parameter is needed")
    try:
        params = [as_scaling_parameter(lam) for lam in dfm["lambda"]]
        profile = _profile(dfm)
    except ParameterError as exc:
        raise ConfigurationError(f"deformation.lambda: {exc}") from None
    sigma = mode_sigma(model, num["k"])
    grid = build_grid(num)
    # above the dense cap only the nearest-eigenvalue tracking runs
    dense = grid.n_points <= MAX_DENSE_DIM
    L = max(abs(grid.x_min), abs(grid.x_max))
    tol = 10 * (grid.h + 1 / L)
    res = StudyResult("scaling")
    spec_rows, curve_rows, per_lambda, series, curves = [], [], [], [], []
    real_ok = trace_ok = ray_ok = True
    for p in params if dense else []:
        op = assemble_deformed_mode_operator(model, sigma, grid, profile, p)
        spec = complex_eigenvalues(tridiagonal_to_dense(op))
        ev = spec.sorted()
        curve = EssentialCurve(0.0, p.lam, 0.0)
        rep = ray_deviation(ev, [curve], REAL_AXIS_TOL, tol)
        for i, (z, cls) in enumerate(zip(ev, rep.classes)):
            spec_rows.append((p.lam.real, p.lam.imag, i, z.real, z.imag, cls))
        rmax = max((abs(z) for z in ev), default=1.0)
        ximax = math.sqrt(rmax) * abs(1 + p.lam)
        xi = np.linspace(0.0, ximax, 101)
        pts = curve(xi)
        curve_rows += [(p.lam.real, p.lam.imag, a, z.real, z.imag) for a, z in zip(xi, pts)]
        label = f"lambda={p.lam.real!r}{p.lam.imag:+}j"
        series.append((label, ev))
        curves.append((label, list(pts)))
        max_imag = max((abs(z.imag) for z in ev), default=0.0)
        entry = {"lambda": [p.lam.real, p.lam.imag], "n": len(ev), "max_imag": max_imag,
                 **rep.to_dict(), "trace_ok": spec.checks.get("trace_ok", True)}
        per_lambda.append(entry)
        trace_ok &= entry["trace_ok"]
        if p.lam == 0:
            real_ok &= max_imag <= REAL_AXIS_TOL
        else:
            ray_ok &= rep.fraction_near_curve >= RAY_FRACTION
    res.tables["scaling_spectrum.csv"] = (
        ["lambda_re", "lambda_im", "index", "re", "im", "class"], spec_rows)
    res.tables["scaling_curves.csv"] = (["lambda_re", "lambda_im", "xi", "re", "im"], curve_rows)
    if dense:
        res.plots["scaling.svg"] = plots.spectrum_plane(series, curves, "deformed mode operator")

    nonzero = [p for p in params if p.lam != 0]
    # persistence of the real bound states
    op0 = assemble_mode_operator(model, sigma, grid)
    lo = float(np.min(op0.diag - 2 / grid.h ** 2)) - 1.0
    bound = [e for e in eigenvalues_in_window(op0, SpectralWindow(lo, 0.0), num["tol"]).eigenvalues
             if e < 0]
    bound = [inverse_iteration(op0, e)[0] for e in bound]
    pers_rows, pers_ok = [], True
    betas = dfm["beta"]
    longer = None
    if bound and nonzero:
        longer = assemble_mode_operator(model, sigma, build_grid(num, GOLDEN * L))
    for E in bound:
        # only states the box has resolved carry a pass/fail verdict: a box
        # longer by the golden ratio must reproduce E to within h^2
        near = eigenvalues_in_window(longer, SpectralWindow(2 * E, 0.0)).eigenvalues \
            if longer is not None else []
        converged = bool(near) and min(abs(e - E) for e in near) <= grid.h ** 2
        for beta in [0.0] + [b for b in betas if abs(b) < math.sqrt(-E)]:
            if not nonzero:
                break
            rep = persistence_check(model, sigma, E, nonzero, grid, profile, beta=beta)
            for e in rep.entries:
                pers_rows.append((E, e.lam.real, e.lam.imag, beta, e.mu.real, e.mu.imag,
                                  e.drift, e.imag, rep.tol, int(converged), int(e.passed)))
            if converged:
                pers_ok &= rep.passed
    res.tables["persistence.csv"] = (
        ["E", "lambda_re", "lambda_im", "beta", "mu_re", "mu_im", "drift", "imag", "tol",
         "converged", "passed"], pers_rows)

    # finite similarity on a coarse grid where cond(D) stays moderate
    conj_rows, conj_ok = [], True
    if betas:
        sgrid = build_grid(dict(num, h=num["similarity_h"]), num["similarity_L"])
        reach = max(abs(sgrid.x_min), abs(sgrid.x_max))
        for p in params:
            try:
                sop = assemble_deformed_mode_operator(model, sigma, sgrid, profile, p)
            except Exception as exc:
                raise ConfigurationError(f"numeric.similarity_L: {exc}") from None
            for beta in betas:
                s_max = profile.s_R(reach)[0]
                cond = math.exp(abs(beta) * s_max)
                dist = conjugation_invariance(sop, beta, profile)
                ok = dist <= SIMILARITY_TOL
                conj_ok &= ok
                conj_rows.append((p.lam.real, p.lam.imag, beta, dist, cond, int(ok)))
    res.tables["conjugation.csv"] = (
        ["lambda_re", "lambda_im", "beta", "distance", "cond_D", "passed"], conj_rows)

    sector_rows, sector_ok = [], True
    for p in nonzero if dense else []:
        op = assemble_deformed_mode_operator(model, sigma, grid, profile, p)
        fit = numerical_range_sector(op.to_dense(), num["samples"], cfg.seed)
        sector_rows.append((p.lam.real, p.lam.imag, grid.h, fit.a, fit.theta, fit.min_real))
        sector_ok &= fit.theta < math.pi / 2
    res.tables["sector.csv"] = (["lambda_re", "lambda_im", "h", "a", "theta", "min_real"],
                                sector_rows)
    res.summaries["scaling.json"] = {
        "sigma": sigma, "h": grid.h, "L": L, "n": grid.n_points, "ray_tol": tol,
        "R": profile.R, "ramp_width": profile.ramp_width, "per_lambda": per_lambda,
        "bound_states": bound, "dense_spectra": dense,
    }
    if dense:
        res.flags["trace_checks"] = trace_ok
        if any(p.lam == 0 for p in params):
            res.flags["real_at_lambda0"] = real_ok
    if nonzero:
        res.flags["persistence"] = pers_ok
        if dense:
            res.flags["ray_fraction"] = ray_ok
            res.flags["sectorial"] = sector_ok
    if betas:
        res.flags["conjugation_similarity"] = conj_ok
    return res


# ---------------------------------------------------------------------------
# 2D guide
# ---------------------------------------------------------------------------

SECTOR_THRESHOLDS = {
    ("dirichlet", "even"): (math.pi / 2) ** 2,
    ("dirichlet", "odd"): math.pi ** 2,
    ("neumann", "even"): 0.0,
    ("neumann", "odd"): (math.pi / 2) ** 2,
}


def run_guide2d(cfg) -> StudyResult:
    model = build_model(cfg.model)
    _require(model, (PlanarGuideModel,), "guide2d")
    num = cfg.numeric
    boundary = num["boundary"]
    nu1 = 0.0 if boundary == "neumann" else (math.pi / 2) ** 2
    lxs = sorted(num["lx_list"])
    if not lxs:
        raise ConfigurationError("numeric.lx_list: at least one truncation length is needed")
    res = StudyResult("guide2d")
    count_rows, eig_rows = [], []
    counts = {"even": [], "odd": []}
    below_nu1 = []
    resid_ok = True
    for lx in lxs:
        nx = int(round(2 * lx / num["hx"])) - 1
        grid = Grid2D(lx, nx, num["ny"])
        total = 0
        for sector in ("even", "odd"):
            op = assemble_guide_operator(model, grid, boundary, sector)
            thr = SECTOR_THRESHOLDS[(boundary, sector)]
            n_thr = inertia_count(op, thr) if thr > 0 else 0
            n_low = inertia_count(op, nu1) if nu1 > 0 else 0
            # eigenvalues at or below 0 do not occur (positive form), so counts
            # below a positive threshold are counts in (0, threshold)
            counts[sector].append(n_thr)
            total += n_low
            count_rows.append((lx, nx, num["ny"], sector, thr, n_thr, nu1, n_low))
            if lx == lxs[-1]:
                r = lowest_eigenpairs_2d(op, min(num["n_eig"], op.n), -1.0, seed=cfg.seed)
                scale = max(1.0, op.norm_bound())
                resid_ok &= all(x <= RESIDUAL_TOL * scale for x in r.residuals)
                eig_rows += [(lx, sector, i, v, rr)
                             for i, (v, rr) in enumerate(zip(r.eigenvalues, r.residuals))]
        below_nu1.append(total)
    res.tables["guide_counts.csv"] = (
        ["lx", "nx", "ny", "sector", "threshold", "count_below_threshold", "nu1",
         "count_below_nu1"], count_rows)
    res.tables["guide_eigenvalues.csv"] = (["lx", "sector", "index", "value", "residual"],
                                           eig_rows)
    oracle_rows, oracle_ok = [], True
    for sector in ("even", "odd"):
        small = _oracle_grid(num, boundary, sector)
        op = assemble_guide_operator(model, small, boundary, sector)
        dense = dense_symmetric_eigenvalues(op.to_dense())
        k = min(num["n_eig"], op.n)
        sub = lowest_eigenpairs_2d(op, k, float(dense[0]) - 1.0, seed=cfg.seed)
        for i, (a, b) in enumerate(zip(sub.eigenvalues, dense[:k])):
            oracle_rows.append((sector, small.nx, small.ny, op.n, i, a, float(b), abs(a - b)))
            oracle_ok &= abs(a - b) <= ORACLE_TOL
        mid = 0.5 * (dense[0] + dense[-1])
        oracle_ok &= inertia_count(op, mid) == int((dense < mid).sum())
    res.tables["guide_oracle.csv"] = (
        ["sector", "nx", "ny", "unknowns", "index", "subspace", "dense", "difference"],
        oracle_rows)
    monotone = all(all(b >= a for a, b in zip(c, c[1:])) for c in counts.values())
    res.flags["counts_monotone"] = monotone
    res.flags["dense_oracle"] = oracle_ok
    res.flags["residuals_ok"] = resid_ok
    res.summaries["guide2d.json"] = {
        "boundary": boundary, "lx": lxs, "hx": num["hx"], "ny": num["ny"], "nu1": nu1,
        "count_below_nu1": below_nu1, "counts_even": counts["even"], "counts_odd": counts["odd"],
        "sector_thresholds": {s: SECTOR_THRESHOLDS[(boundary, s)] for s in ("even", "odd")},
    }
    res.plots["guide2d.svg"] = plots.staircase(
        lxs, below_nu1 if boundary == "dirichlet" else counts["odd"],
        "guide eigenvalues below the sector threshold")
    return res


def _oracle_grid(num, boundary, sector) -> Grid2D:
    """Small nested grid with at most 40 unknowns for the dense cross-check."""
    lx, ny = num["oracle_lx"], num["oracle_ny"]
    nx = max(1, int(round(2 * lx / num["hx"])) - 1)
    grid = Grid2D(lx, nx, ny)
    while nx * ny > MAX_ORACLE_UNKNOWNS and nx > 1:
        nx -= 2
        grid = Grid2D(lx * (nx + 1) / (grid.nx + 1), nx, ny)
    if nx * ny > MAX_ORACLE_UNKNOWNS:
        raise ConfigurationError("numeric.oracle_ny: oracle grid exceeds 40 unknowns")
    return grid


STUDIES = {
    "thresholds": run_thresholds,
    "spectrum": run_spectrum,
    "accumulation": run_accumulation,
    "decay": run_decay,
    "scaling": run_scaling,
    "guide2d": run_guide2d,
}


def run_study(cfg) -> StudyResult:
    return STUDIES[cfg.kind](cfg)
