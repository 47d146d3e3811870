import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import cylspec.eig_complex as eig_complex
from cylspec.discretize import Grid1D, assemble_deformed_mode_operator, assemble_mode_operator, conjugate_operator
from cylspec.eig_complex import (
    balance,
    complex_eigenvalues,
    hessenberg,
    nearest_eigenvalue,
    tridiagonal_to_dense,
)
from cylspec.eig_real import SpectralWindow, eigenvalues_in_window
from cylspec.errors import NumericError, ResourceError
from cylspec.model_zoo import ScalingProfile, SeparableModel, SquareWell
from cylspec.spectral_analysis import multiset_distance


def test_one_by_one():
    spec = complex_eigenvalues([[2.5 - 1j]])
    assert spec.eigenvalues == [2.5 - 1j]


def test_rotation():
    got = complex_eigenvalues([[0, 1], [-1, 0]]).eigenvalues
    assert multiset_distance(got, [1j, -1j]) <= 1e-10


def test_companion_cube_roots():
    got = complex_eigenvalues([[0, 0, 1], [1, 0, 0], [0, 1, 0]]).eigenvalues
    roots = [complex(math.cos(2 * math.pi * j / 3), math.sin(2 * math.pi * j / 3)) for j in range(3)]
    assert multiset_distance(got, roots) <= 1e-10


@given(st.integers(1, 25), st.integers(0, 2 ** 31))
@settings(max_examples=30, deadline=None)
def test_random_complex_matches_lapack_and_trace(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    spec = complex_eigenvalues(a)
    assert len(spec) == n
    assert spec.checks["trace_ok"]
    assert multiset_distance(spec.eigenvalues, np.linalg.eigvals(a)) <= 1e-9 * n


def test_balance_and_hessenberg_are_similarities():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((8, 8)) * np.logspace(-3, 3, 8)[:, None]
    b, _ = balance(a)
    h = hessenberg(b)
    assert np.allclose(np.tril(h, -2), 0)
    ref = np.linalg.eigvals(a)
    assert multiset_distance(np.linalg.eigvals(h), ref) <= 1e-9 * np.abs(ref).max()


def test_real_symmetric_has_real_spectrum():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((40, 40))
    a = a + a.T
    vals = complex_eigenvalues(a).eigenvalues
    scale = np.abs(a).sum(axis=1).max()
    assert max(abs(z.imag) for z in vals) <= 1e-9 * scale


def test_conjugate_parameter_gives_conjugate_spectrum():
    g = Grid1D.symmetric(8.0, 0.1)
    prof = ScalingProfile()
    up = assemble_deformed_mode_operator(SeparableModel(), 2.0, g, prof, 0.25j)
    dn = assemble_deformed_mode_operator(SeparableModel(), 2.0, g, prof, -0.25j)
    a = complex_eigenvalues(up.to_dense()).sorted()
    b = sorted(np.conj(complex_eigenvalues(dn.to_dense()).eigenvalues), key=lambda z: (z.real, z.imag))
    assert multiset_distance(a, b) <= 1e-8


def test_diagonal_similarity_invariance():
    g = Grid1D.half_line(10.0, 0.1)
    prof = ScalingProfile(6.0, 1.0)
    op = assemble_deformed_mode_operator(SquareWell(), 0.0, g, prof, 0.2j)
    beta = 1.5
    s_max = prof.s_R(g.x_max)[0]
    assert math.exp(beta * s_max) <= 1e6
    a = complex_eigenvalues(op.to_dense()).eigenvalues
    b = complex_eigenvalues(conjugate_operator(op, beta, prof).to_dense()).eigenvalues
    assert multiset_distance(a, b) <= 1e-8


def test_tridiagonal_embedding():
    g = Grid1D(0.0, 4.0, 3)
    op = assemble_mode_operator(SeparableModel(amplitude=0.0), 0.0, g)
    dense = tridiagonal_to_dense(op)
    assert dense.dtype == complex and np.array_equal(dense.real, op.to_dense())
    assert np.array_equal(dense, dense.conj().T)


def test_qr_matches_sturm_on_flat_operator():
    g = Grid1D(0.0, 20.1, 200)
    op = assemble_deformed_mode_operator(SeparableModel(amplitude=0.0), 0.0, g, ScalingProfile(), 0)
    assert op.n == 200
    qr = complex_eigenvalues(tridiagonal_to_dense(op)).eigenvalues
    real = assemble_mode_operator(SeparableModel(amplitude=0.0), 0.0, g)
    st_vals = eigenvalues_in_window(real, SpectralWindow(-1, 500), 1e-13).eigenvalues
    assert multiset_distance(qr, st_vals) <= 1e-9


def test_dimension_cap(monkeypatch):
    monkeypatch.setattr(eig_complex, "MAX_DENSE_DIM", 4)
    with pytest.raises(ResourceError):
        complex_eigenvalues(np.eye(5))


def test_iteration_cap_reports_partial(monkeypatch):
    monkeypatch.setattr(eig_complex, "ITERATION_CAP", 0)
    rng = np.random.default_rng(0)
    with pytest.raises(NumericError) as info:
        complex_eigenvalues(rng.standard_normal((6, 6)))
    assert info.value.partial == []


def test_nearest_eigenvalue_matches_dense():
    g = Grid1D.half_line(20.0, 0.05)
    op = assemble_deformed_mode_operator(SquareWell(), 0.0, g, ScalingProfile(6.0, 1.0), 0.2j)
    ref = np.linalg.eigvals(op.to_dense())
    target = ref[np.argmin(ref.real)]
    mu, res, _ = nearest_eigenvalue(op, target.real + 0.01)
    assert abs(mu - target) <= 1e-10
