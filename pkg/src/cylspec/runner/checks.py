"""Built-in property suite run by ``cylspec --check``.

Small, fast checks of the solver and model invariants; each returns a
``(name, passed, detail)`` triple.
"""
from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from ..discretize import (
    Grid1D,
    Grid2D,
    TridiagonalOperator,
    assemble_deformed_mode_operator,
    assemble_guide_operator,
    assemble_mode_operator,
    read_triplets,
    write_triplets,
)
from ..eig_complex import complex_eigenvalues
from ..eig_real import (
    SpectralWindow,
    dense_symmetric_eigenvalues,
    eigenvalues_in_window,
    lowest_eigenpairs_2d,
    sturm_count,
)
from ..errors import PropertyViolation
from ..model_zoo import (
    CrossSectionSpec,
    PlanarGuideModel,
    ScalingProfile,
    SeparableModel,
    build_threshold_ladder,
)
from ..spectral_analysis import multiset_distance, numerical_range_sector, predict_essential_curve


def _laplace3():
    d = np.full(3, 2.0)
    e = np.full(2, -1.0)
    return TridiagonalOperator(d, e, e.copy())


def check_sturm_examples():
    op = _laplace3()
    got = (sturm_count(op, 2.0), sturm_count(op, 4.0), sturm_count(op, -10.0))
    return got == (1, 3, 0), f"counts {got}"


def check_window_example():
    vals = eigenvalues_in_window(_laplace3(), SpectralWindow(0, 3), 1e-13).eigenvalues
    err = max(abs(vals[0] - (2 - math.sqrt(2))), abs(vals[1] - 2.0)) if len(vals) == 2 else math.inf
    return err <= 1e-12, f"error {err:.2e}"


def check_bisection_vs_dense(seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 51))
        d, e = rng.standard_normal(n), rng.standard_normal(n - 1)
        a = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        got = eigenvalues_in_window((d, e), SpectralWindow(-20, 20), 1e-12).eigenvalues
        worst = max(worst, float(np.abs(np.array(got) - dense_symmetric_eigenvalues(a)).max()))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


def check_qr_closed_forms():
    rot = complex_eigenvalues([[0, 1], [-1, 0]]).eigenvalues
    cube = complex_eigenvalues([[0, 0, 1], [1, 0, 0], [0, 1, 0]]).eigenvalues
    roots = [complex(math.cos(2 * math.pi * j / 3), math.sin(2 * math.pi * j / 3)) for j in range(3)]
    err = max(multiset_distance(rot, [1j, -1j]), multiset_distance(cube, roots))
    return err <= 1e-10, f"max deviation {err:.2e}"


def check_qr_vs_sturm(seed=1):
    rng = np.random.default_rng(seed)
    n = 60
    d, e = rng.standard_normal(n), rng.standard_normal(n - 1)
    a = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    qr = complex_eigenvalues(a).eigenvalues
    st = eigenvalues_in_window((d, e), SpectralWindow(-20, 20), 1e-12).eigenvalues
    err = multiset_distance(qr, st)
    imag = max(abs(z.imag) for z in qr)
    return err <= 1e-9 and imag <= 1e-9 * 10, f"deviation {err:.2e}, max |Im| {imag:.2e}"


def check_lambda_zero_identity():
    model = SeparableModel()
    grid = Grid1D.symmetric(10, 0.1)
    a = assemble_mode_operator(model, math.pi ** 2 / 4, grid)
    b = assemble_deformed_mode_operator(model, math.pi ** 2 / 4, grid, ScalingProfile(), 0)
    same = (np.array_equal(a.diag, b.diag.real) and np.array_equal(a.upper, b.upper.real)
            and np.array_equal(a.lower, b.lower.real))
    return same, "bitwise identical" if same else "differs"


def check_conjugate_parameter():
    model = SeparableModel()
    grid = Grid1D.symmetric(8, 0.1)
    prof = ScalingProfile()
    up = assemble_deformed_mode_operator(model, math.pi ** 2 / 4, grid, prof, 0.2j)
    dn = assemble_deformed_mode_operator(model, math.pi ** 2 / 4, grid, prof, -0.2j)
    a = complex_eigenvalues(up.to_dense()).eigenvalues
    b = complex_eigenvalues(dn.to_dense()).eigenvalues
    err = multiset_distance(a, np.conj(b))
    return err <= 1e-8, f"deviation {err:.2e}"


def check_sector_examples():
    psd = numerical_range_sector(np.diag([1.0, 2.0, 3.0]), 200, 0)
    ok = psd.a == 0 and psd.theta == 0
    try:
        numerical_range_sector(np.array([[0.0, 1.0], [-1.0, 0.0]]), 200, 0)
        skew = False
    except PropertyViolation:
        skew = True
    return ok and skew, f"psd (a, theta) = ({psd.a}, {psd.theta}); skew flagged: {skew}"


def check_essential_curve():
    _, ray = predict_essential_curve(0.0, 0, 0, [0.0, 1.0, 2.0])
    _, pt = predict_essential_curve(0.0, 0, -0.5, [0.0])
    curve, far = predict_essential_curve(0.0, 0.3j, 0, [10.0])
    ok = (np.allclose(ray, [0, 1, 4], atol=0, rtol=0)
          and abs(pt[0] + 0.25) <= 1e-15
          and abs(np.angle(far[0]) + 2 * math.atan(0.3)) <= 1e-12)
    return ok, f"angle {np.angle(far[0]):.6f}"


def check_thresholds():
    d = build_threshold_ladder(CrossSectionSpec("interval-dirichlet"), 2).values
    nm = build_threshold_ladder(CrossSectionSpec("interval-neumann"), 2).values
    err = max(abs(d[0] - math.pi ** 2 / 4), abs(d[1] - math.pi ** 2), abs(nm[1] - math.pi ** 2 / 4))
    return err <= 1e-12, f"error {err:.2e}"


def check_banded_vs_dense():
    model = PlanarGuideModel()
    worst = 0.0
    for sector in ("even", "odd"):
        op = assemble_guide_operator(model, Grid2D(3.0, 5, 4), "dirichlet", sector)
        dense = dense_symmetric_eigenvalues(op.to_dense())
        sub = lowest_eigenpairs_2d(op, 3, float(dense[0]) - 1.0)
        worst = max(worst, float(np.abs(np.array(sub.eigenvalues) - dense[:3]).max()))
    return worst <= 1e-9, f"max deviation {worst:.2e}"


def check_triplet_roundtrip():
    op = assemble_deformed_mode_operator(SeparableModel(), 1.0, Grid1D.symmetric(6, 0.2),
                                         ScalingProfile(), 0.1j)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "a.txt")
        write_triplets(op, path)
        back = read_triplets(path)
    same = np.array_equal(back, op.to_dense())
    return same, "exact" if same else "mismatch"


CHECKS = [
    ("sturm_examples", check_sturm_examples),
    ("window_example", check_window_example),
    ("bisection_vs_dense", check_bisection_vs_dense),
    ("qr_closed_forms", check_qr_closed_forms),
    ("qr_vs_sturm", check_qr_vs_sturm),
    ("lambda_zero_identity", check_lambda_zero_identity),
    ("conjugate_parameter", check_conjugate_parameter),
    ("sector_examples", check_sector_examples),
    ("essential_curve", check_essential_curve),
    ("thresholds", check_thresholds),
    ("banded_vs_dense", check_banded_vs_dense),
    ("triplet_roundtrip", check_triplet_roundtrip),
]


def run_checks():
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed property, reported as such
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
