import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylspec.errors import ConfigurationError, ContractViolation, DomainError, ParameterError, ThresholdError
from cylspec.model_zoo import (
    CrossSectionSpec,
    PlanarGuideModel,
    ScalingParameter,
    ScalingProfile,
    SeparableModel,
    build_threshold_ladder,
    contour_point,
    eval_profile,
    guide_metric,
    max_decay_rate,
    potential_Vk,
    scaling_s,
    validate_stabilization,
)


def _periodic_fd_levels(n, count):
    # circle of radius 1 by a periodic 3-point stencil
    h = 2 * math.pi / n
    a = (2 * np.eye(n) - np.roll(np.eye(n), 1, 1) - np.roll(np.eye(n), -1, 1)) / h ** 2
    return np.linalg.eigvalsh(a)[:count]


def test_dirichlet_ladder_closed_form():
    lad = build_threshold_ladder(CrossSectionSpec("interval-dirichlet"), 3)
    assert lad.entries == ((math.pi ** 2 / 4, 1), (math.pi ** 2, 1), (9 * math.pi ** 2 / 4, 1))


def test_neumann_ladder_closed_form():
    lad = build_threshold_ladder(CrossSectionSpec("interval-neumann"), 2)
    assert lad.entries == ((0.0, 1), (math.pi ** 2 / 4, 1))


def test_circle_ladder_against_periodic_fd():
    lad = build_threshold_ladder(CrossSectionSpec("circle"), 3)
    assert [v for v, _ in lad.entries] == [0.0, 1.0, 4.0]
    assert [m for _, m in lad.entries] == [1, 2, 2]
    errs = []
    for n in (200, 400):
        fd = _periodic_fd_levels(n, 5)
        errs.append(np.abs(fd - np.array([0, 1, 1, 4, 4])).max())
    assert errs[1] < errs[0] / 3.5 and errs[1] < 1e-3


def test_copies_scale_multiplicities_only():
    one = build_threshold_ladder(CrossSectionSpec("circle", 1.0, 1), 4)
    two = build_threshold_ladder(CrossSectionSpec("circle", 1.0, 2), 4)
    assert one.values == two.values
    assert [2 * m for m in one.multiplicities] == two.multiplicities


def test_unsupported_kind_is_configuration_error():
    with pytest.raises(ConfigurationError):
        CrossSectionSpec("torus")


def test_profile_examples():
    f, _, _ = eval_profile(SeparableModel(1, 1.0, 1.0, 1.0), 10.0)
    assert abs(f - 1.1 ** 0.25) <= 1e-14
    f, f1, f2 = eval_profile(SeparableModel(), 1e12)
    assert abs(f - 1) < 1e-11 and abs(f1) < 1e-20 and abs(f2) < 1e-30
    g, _, _ = eval_profile(PlanarGuideModel(1.0, 5.0, 2.0), 10.0)
    assert abs(g - 1.5) <= 1e-15


def _vk_oracle(x, sigma, a=1.0, delta=1.0, n=1):
    # f = (1 + a x^-delta)^(n/4), derivatives written out by hand
    p = n / 4
    w = 1 + a * x ** -delta
    w1 = -a * delta * x ** (-delta - 1)
    w2 = a * delta * (delta + 1) * x ** (-delta - 2)
    f = w ** p
    f2 = p * (p - 1) * w ** (p - 2) * w1 ** 2 + p * w ** (p - 1) * w2
    return f2 / f + (1 / w - 1) * sigma


def test_potential_examples():
    m = SeparableModel()
    v = potential_Vk(m, math.pi ** 2 / 4, 10.0)
    assert abs(v - _vk_oracle(10.0, math.pi ** 2 / 4)) <= 1e-12
    assert abs(v + 0.2239) <= 1e-4
    v0 = potential_Vk(m, 0.0, 10.0)
    assert abs(v0 - 4.39e-4) <= 1e-6
    assert abs(potential_Vk(m, 1.0, 1e9)) < 1e-8


def test_potential_complex_tail_continues_real_formula():
    m = SeparableModel()
    z = 10.0 + 1e-7j
    v = potential_Vk(m, 2.0, z)
    assert abs(v - potential_Vk(m, 2.0, 10.0)) < 1e-7


def test_potential_rejects_complex_inside_bridge():
    with pytest.raises(ContractViolation):
        potential_Vk(SeparableModel(c=1.0), 1.0, 0.5 + 0.1j)


@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
def test_bridge_matches_tail_at_c(delta):
    m = SeparableModel(1, delta, 1.5, 1.0)
    inner = eval_profile(m, np.nextafter(1.5, 0))
    outer = eval_profile(m, 1.5)
    for a, b in zip(inner, outer):
        assert abs(a - b) <= 1e-12
    x = np.linspace(-1.5, 1.5, 301)
    assert np.all(eval_profile(m, x)[0] > 0)


@given(st.floats(1.0, 1e6), st.floats(0.1, 2.0), st.floats(0.1, 10))
def test_tail_identity_exact(x, delta, a):
    m = SeparableModel(2, delta, 1.0, a)
    f, _, _ = eval_profile(m, x)
    assert abs(f ** 2 - 1 - a * x ** -delta) <= 1e-13 * (1 + a * x ** -delta)


def test_guide_metric_examples():
    g = guide_metric(PlanarGuideModel(1.0, 5.0, 2.0), 8.0, 1.0)
    assert abs(g.g2 - 2.25) < 1e-14 and abs(g.sqrt_det - 1.5) < 1e-14
    assert abs(g.g0 - 1.0025) < 1e-14 and abs(g.g1 + 0.075) < 1e-14
    g = guide_metric(PlanarGuideModel(), np.array([0.0, 5.0, 50.0]), 0.0)
    assert np.all(g.g1 == 0)
    flat = guide_metric(PlanarGuideModel(amplitude=0.0), 3.0, 0.7)
    assert (flat.g0, flat.g1, flat.g2, flat.sqrt_det) == (1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ContractViolation):
        guide_metric(PlanarGuideModel(), 1.0, 1.5)


def test_guide_metric_inverse():
    g = guide_metric(PlanarGuideModel(), np.linspace(-2, 10, 7), 0.6)
    for i in range(7):
        m = np.array([[g.g0[i], g.g1[i]], [g.g1[i], g.g2[i]]])
        inv = np.array([[g.inv00[i], g.inv01[i]], [g.inv01[i], g.inv11[i]]])
        assert np.allclose(m @ inv, np.eye(2), atol=1e-13)
        assert abs(np.sqrt(np.linalg.det(m)) - g.sqrt_det[i]) < 1e-12


def test_scaling_s_examples():
    p = ScalingProfile(3.0, 1.0)
    assert scaling_s(p, 1.0) == (0.0, 0.0)
    s, ds = scaling_s(p, 2.0)
    assert abs(s - 0.5) < 1e-15 and ds == 1.0
    assert scaling_s(p, 5.0) == (3.5, 1.0)


def test_scaling_s_properties():
    p = ScalingProfile(3.0, 1.3)
    x = np.linspace(-5, 10, 20001)
    s, ds = scaling_s(p, x)
    assert np.all(ds >= 0) and np.all(ds <= 1)
    assert np.all(np.diff(s) >= 0)
    assert np.all(s[x <= 1] == 0)
    # s' is the derivative of s
    mid = 0.5 * (ds[1:] + ds[:-1])
    assert np.abs(np.diff(s) / np.diff(x) - mid).max() < 1e-6


def test_contour_point_examples():
    p = ScalingProfile(3.0, 1.0)
    assert contour_point(p, 0.2j, 4.0) == (4.0 + 0j, 1 + 0j)
    z, j = contour_point(p, 0.2j, 10.0)
    assert abs(z - (10 + 1.1j)) < 1e-15 and abs(j - (1 + 0.2j)) < 1e-15
    z, _ = contour_point(p, 0.3, 10.0)
    assert z.imag == 0


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-30, 30))
def test_contour_conjugate_symmetry(re, im, x):
    lam = complex(re, im)
    if abs(lam) >= ScalingParameter().max_modulus:
        return
    p = ScalingProfile()
    z1, j1 = contour_point(p, lam, x)
    z2, j2 = contour_point(p, lam.conjugate(), x)
    assert z1.conjugate() == z2 and j1.conjugate() == j2
    assert abs(j1) > 1 - 1 / math.sqrt(2)


def test_scaling_parameter_bound():
    with pytest.raises(ParameterError):
        ScalingParameter(0.71j)
    assert ScalingParameter(0.3j).conjugate().lam == -0.3j


def test_max_decay_rate_examples():
    lad = build_threshold_ladder(CrossSectionSpec(), 2)
    assert abs(max_decay_rate(2.0, lad) - math.sqrt(math.pi ** 2 / 4 - 2)) < 1e-15
    assert abs(max_decay_rate(2.0, lad) - 0.68366) < 1e-5
    assert max_decay_rate(math.pi ** 2 / 4 - 1e-10, lad) < 1e-4
    from cylspec.model_zoo import ThresholdLadder
    assert max_decay_rate(0.0, ThresholdLadder(((1.0, 1), (4.0, 1)))) == 1.0
    with pytest.raises(ThresholdError):
        max_decay_rate(math.pi ** 2, lad)
    with pytest.raises(DomainError):
        max_decay_rate(20.0, lad)


def test_stabilization_reports():
    flat = validate_stabilization(SeparableModel(amplitude=0.0), [1, 10, 100])
    assert max(flat.deviation) == 0 and flat.passed
    guide = validate_stabilization(PlanarGuideModel(), [8.0, 98.0])
    assert guide.deviation[1] <= guide.deviation[0]
    sq = validate_stabilization(SeparableModel(1, 2.0, 1.0, 1.0), np.geomspace(10, 1e4, 20))
    assert abs(sq.loglog_slope + 2) < 0.01
