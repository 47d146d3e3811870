import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylspec.discretize import (
    Grid1D,
    Grid2D,
    TridiagonalOperator,
    assemble_deformed_mode_operator,
    assemble_guide_operator,
    assemble_mode_operator,
    conjugate_operator,
    read_triplets,
    write_triplets,
)
from cylspec.errors import ContractViolation, ParameterError
from cylspec.model_zoo import PlanarGuideModel, ScalingProfile, SeparableModel, SquareWell, potential_Vk

FLAT = SeparableModel(amplitude=0.0)


def test_grid_spacing():
    g = Grid1D.symmetric(10.0, 0.1)
    assert g.n_points == 199 and abs(g.h - 0.1) < 1e-15
    assert abs(g.x[0] + 9.9) < 1e-12 and abs(g.x[-1] - 9.9) < 1e-12
    with pytest.raises(ParameterError):
        Grid1D(0.0, 1.0, 2)


def test_laplacian_example():
    op = assemble_mode_operator(FLAT, 1.0, Grid1D(-2.0, 2.0, 3))
    assert np.array_equal(op.to_dense(), [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
    ev = np.linalg.eigvalsh(op.to_dense())
    assert np.allclose(ev, [2 - math.sqrt(2), 2, 2 + math.sqrt(2)], atol=1e-14)


def test_diagonal_carries_potential():
    sigma = math.pi ** 2 / 4
    g = Grid1D.symmetric(20.0, 0.05)
    op = assemble_mode_operator(SeparableModel(), sigma, g)
    i = int(np.argmin(np.abs(g.x - 10.0)))
    assert abs(g.x[i] - 10.0) < 1e-9
    want = 2 / g.h ** 2 + potential_Vk(SeparableModel(), sigma, 10.0)
    assert abs(op.diag[i] - want) < 1e-9
    assert abs(op.diag[i] - 2 / g.h ** 2 + 0.2239) < 1e-4
    assert op.is_symmetric


def test_deformed_lambda_zero_is_bitwise_real():
    g = Grid1D.symmetric(12.0, 0.1)
    a = assemble_mode_operator(SeparableModel(), 2.0, g)
    b = assemble_deformed_mode_operator(SeparableModel(), 2.0, g, ScalingProfile(), 0)
    for x, y in ((a.diag, b.diag), (a.lower, b.lower), (a.upper, b.upper)):
        assert np.array_equal(x, y.real) and not np.any(y.imag)


def test_deformed_interior_rows_scale_by_jacobian():
    lam = 0.3j
    g = Grid1D.half_line(30.0, 0.1)
    op = assemble_deformed_mode_operator(FLAT, 0.0, g, ScalingProfile(3.0, 1.0), lam)
    rows = g.x > 6.0
    scale = (1 + lam) ** -2 / g.h ** 2
    assert np.allclose(op.diag[rows], 2 * scale, rtol=1e-13, atol=0)
    assert np.allclose(op.upper[rows[:-1]], -scale, rtol=1e-13, atol=0)
    assert np.allclose(op.lower[rows[1:]], -scale, rtol=1e-13, atol=0)


def test_real_lambda_keeps_isolated_eigenvalue():
    model, g = SquareWell(), Grid1D.half_line(20.0, 0.05)
    real = np.linalg.eigvalsh(assemble_mode_operator(model, 0.0, g).to_dense())[0]
    op = assemble_deformed_mode_operator(model, 0.0, g, ScalingProfile(6.0, 1.0), 0.3)
    ev = np.linalg.eigvals(op.to_dense())
    near = ev[np.argmin(np.abs(ev - real))]
    assert abs(near - real) < 10 * g.h ** 2


def test_deformation_preconditions():
    g = Grid1D.symmetric(10.0, 0.1)
    with pytest.raises(ParameterError):
        assemble_deformed_mode_operator(SeparableModel(c=3.0), 1.0, g, ScalingProfile(3.0), 0.1j)
    with pytest.raises(ParameterError):
        assemble_deformed_mode_operator(SeparableModel(), 1.0, g, ScalingProfile(), 0.75j)


def test_conjugate_parameter_gives_conjugate_matrix():
    g = Grid1D.symmetric(10.0, 0.1)
    a = assemble_deformed_mode_operator(SeparableModel(), 2.0, g, ScalingProfile(), 0.2 + 0.1j)
    b = assemble_deformed_mode_operator(SeparableModel(), 2.0, g, ScalingProfile(), 0.2 - 0.1j)
    assert np.array_equal(a.to_dense().conj(), b.to_dense())


def test_conjugation_identity_and_products():
    g = Grid1D.symmetric(8.0, 0.1)
    prof = ScalingProfile()
    op = assemble_deformed_mode_operator(SeparableModel(), 2.0, g, prof, 0.2j)
    assert conjugate_operator(op, 0.0, prof) is op
    c = conjugate_operator(op, -0.7, prof)
    assert np.array_equal(c.diag, op.diag)
    assert np.allclose(c.lower * c.upper, op.lower * op.upper, rtol=1e-14, atol=0)
    d = np.exp(-0.7 * prof.s_R(np.abs(g.x))[0])
    want = np.diag(1 / d) @ op.to_dense() @ np.diag(d)
    assert np.allclose(c.to_dense(), want, rtol=1e-13, atol=1e-13)


@given(st.integers(3, 12), st.floats(-2, 2), st.integers(0, 2 ** 31))
@settings(max_examples=30, deadline=None)
def test_conjugation_preserves_spectrum(n, beta, seed):
    rng = np.random.default_rng(seed)
    g = Grid1D(0.0, 10.0, n)
    op = TridiagonalOperator(rng.standard_normal(n) + 0j, rng.standard_normal(n - 1) + 0j,
                             rng.standard_normal(n - 1) + 0j, g)
    c = conjugate_operator(op, beta, ScalingProfile(1.0, 1.0))
    a = np.sort_complex(np.linalg.eigvals(op.to_dense()))
    b = np.sort_complex(np.linalg.eigvals(c.to_dense()))
    assert np.abs(np.poly(a) - np.poly(b)).max() < 1e-8 * max(1.0, np.abs(np.poly(a)).max())


def test_triplet_roundtrip(tmp_path):
    op = assemble_deformed_mode_operator(SeparableModel(), 1.0, Grid1D.symmetric(6.0, 0.2),
                                         ScalingProfile(), 0.1j)
    path = tmp_path / "a.txt"
    nnz = write_triplets(op, path)
    assert nnz == op.n + 2 * (op.n - 1)
    assert np.array_equal(read_triplets(path), op.to_dense())


def test_operator_shape_contract():
    with pytest.raises(ContractViolation):
        TridiagonalOperator(np.zeros(3), np.zeros(1), np.zeros(2))


@pytest.mark.parametrize("boundary", ["dirichlet", "neumann"])
@pytest.mark.parametrize("sector", ["full", "even", "odd"])
def test_guide_operator_is_symmetric(boundary, sector):
    op = assemble_guide_operator(PlanarGuideModel(), Grid2D(6.0, 11, 8), boundary, sector)
    a = op.to_dense()
    assert np.array_equal(a, a.T)
    v = np.random.default_rng(0).standard_normal(op.n)
    assert np.allclose(op.matvec(v), a @ v, rtol=1e-14, atol=1e-12)


def _flat_lowest(boundary, sector, k):
    m = PlanarGuideModel(amplitude=0.0)
    op = assemble_guide_operator(m, Grid2D(2.0, 10 * k - 1, 8 * k), boundary, sector)
    return np.linalg.eigvalsh(op.to_dense())[0]


@pytest.mark.parametrize("boundary,sector,transverse", [
    ("dirichlet", "full", math.pi ** 2 / 4),
    ("dirichlet", "odd", math.pi ** 2),
    ("neumann", "odd", math.pi ** 2 / 4),
])
def test_flat_guide_second_order(boundary, sector, transverse):
    exact = transverse + (math.pi / 4) ** 2
    e1 = abs(_flat_lowest(boundary, sector, 1) - exact)
    e2 = abs(_flat_lowest(boundary, sector, 2) - exact)
    e4 = abs(_flat_lowest(boundary, sector, 4) - exact)
    assert 3.3 < e1 / e2 < 4.7 and 3.3 < e2 / e4 < 4.7


def test_flat_neumann_ground_is_axial_only():
    assert abs(_flat_lowest("neumann", "full", 4) - (math.pi / 4) ** 2) < 1e-3
