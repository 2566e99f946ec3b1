import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ksub.exprfield import ScalarField
from ksub.model import (Point3, bundle_curvature, canonical_model, eck_preset, eta_field,
                        frame_at, gauge_map, gauge_shift, is_positive_definite, metric_at,
                        model_from_tau, tau_gradient, vertical_translate)
from ksub.numerics import central_diff
from ksub.surface import ConformalSurface, Disk, DomainError, Plane, Rect, lambda_kappa_surface
from ksub.verify import generic_model, tau_x_model


def flat():
    return ConformalSurface(Plane(), ScalarField.constant(1.0))


def unit_points(n, seed=3, radius=1.2):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(n))
    th = rng.uniform(0, 2 * math.pi, n)
    return r * np.cos(th), r * np.sin(th)


def test_metric_euclidean():
    m = canonical_model(flat(), "0", "0")
    np.testing.assert_array_equal(metric_at(m, (0.3, -2.0, 5.0)), np.eye(3))


def test_metric_heisenberg_origin():
    np.testing.assert_allclose(metric_at(eck_preset(0.0, 0.5), (0, 0, 0)), np.eye(3), atol=0)


def test_metric_expansion():
    m = canonical_model(flat(), "0", "x")
    g = metric_at(m, (1.0, 0.0, 7.0))
    np.testing.assert_allclose(g, [[1, 0, 0], [0, 2, -1], [0, -1, 1]], atol=1e-15)
    assert is_positive_definite(g)


def test_frame_standard_basis():
    E = frame_at(canonical_model(flat(), "0", "0"), (1, 2, 3)).matrix()
    np.testing.assert_array_equal(E, np.eye(3))


def test_frame_scaled():
    s = ConformalSurface(Plane(), ScalarField.constant(2.0))
    m = canonical_model(s, "1", "0")
    p = (0.4, -0.1, 0.0)
    E1 = frame_at(m, p).E1
    np.testing.assert_allclose(E1, [0.5, 0.0, 1.0])
    assert E1 @ metric_at(m, p) @ E1 == pytest.approx(1.0, abs=1e-15)


MODELS = [eck_preset(0.0, 0.5), eck_preset(-1.0, 0.3), eck_preset(4.0, 1.0),
          tau_x_model(), generic_model()]


@settings(max_examples=200, deadline=None)
@given(i=st.integers(0, len(MODELS) - 1), x=st.floats(-0.9, 0.9), y=st.floats(-0.9, 0.9),
       z=st.floats(-10, 10))
def test_frame_is_orthonormal(i, x, y, z):
    m = MODELS[i]
    E = frame_at(m, (x, y, z)).matrix()
    g = metric_at(m, (x, y, z))
    assert np.max(np.abs(E.T @ g @ E - np.eye(3))) <= 1e-12
    np.testing.assert_array_equal(E[:, 2], [0, 0, 1])
    assert is_positive_definite(g)


@settings(max_examples=50, deadline=None)
@given(i=st.integers(0, len(MODELS) - 1), x=st.floats(-0.9, 0.9), y=st.floats(-0.9, 0.9),
       z=st.floats(-10, 10), t=st.floats(-10, 10))
def test_metric_is_z_independent(i, x, y, z, t):
    m = MODELS[i]
    p = Point3(x, y, z)
    g = metric_at(m, p)
    assert g[2, 2] == 1.0
    np.testing.assert_array_equal(g, metric_at(m, vertical_translate(p, t)))


def test_vertical_translation_group_law():
    p = Point3(1.0, 2.0, 0.25)
    assert vertical_translate(p, 0.0) == p
    assert vertical_translate(vertical_translate(p, 0.5), 0.25) == vertical_translate(p, 0.75)


def test_product_model_has_zero_bundle_curvature():
    assert bundle_curvature(canonical_model(flat(), "0", "0"), (0.5, 0.5)) == 0.0


def test_bundle_curvature_of_linear_b():
    m = canonical_model(flat(), "0", "x")
    x, y = unit_points(20)
    np.testing.assert_allclose(bundle_curvature(m, (x, y)), 0.5, atol=1e-15)


@pytest.mark.parametrize("kappa, tau0", [(0.0, 0.5), (-1.0, 0.3), (4.0, 1.0), (1.0, -2.0)])
def test_presets_have_constant_bundle_curvature(kappa, tau0):
    x, y = unit_points(20, radius=1.5)
    np.testing.assert_allclose(bundle_curvature(eck_preset(kappa, tau0), (x, y)), tau0, atol=1e-9)


def test_euclidean_preset():
    m = eck_preset(0.0, 0.0)
    np.testing.assert_array_equal(metric_at(m, (3.0, -1.0, 2.0)), np.eye(3))


def test_bundle_curvature_outside_domain():
    with pytest.raises(DomainError):
        bundle_curvature(eck_preset(-1.0, 0.0), (2.5, 0.0))


def test_tau_gradient_matches_central_difference():
    m = generic_model()
    p = (0.3, -0.4)
    exact = tau_gradient(m, p)
    for k, var in enumerate("xy"):
        fd = central_diff(lambda x, y: float(bundle_curvature(m, (x, y))), p, var)
        assert exact[k] == pytest.approx(fd, abs=1e-7)


# -- eta and model_from_tau --------------------------------------------------

@pytest.mark.parametrize("kappa, tau0", [(0.0, 0.7), (-1.0, 0.3), (1.0, -1.5)])
def test_eta_of_constant_tau(kappa, tau0):
    s = lambda_kappa_surface(kappa)
    eta = eta_field(s, ScalarField.constant(tau0))
    assert eta(0.0, 0.0) == pytest.approx(tau0, abs=1e-12)
    for p in [(0.5, 0.2), (-0.9, 1.0), (1.3, -0.1)]:
        assert eta(*p) == pytest.approx(tau0 * s.lam(*p), abs=1e-10)


def test_eta_trivial_cases():
    assert eta_field(flat(), ScalarField.constant(0.0))(0.4, 0.9) == 0.0
    assert eta_field(flat(), ScalarField.constant(1.0))(0.4, 0.9) == pytest.approx(1.0, abs=1e-12)


def test_eta_gradient_matches_central_difference():
    eta = eta_field(lambda_kappa_surface(-1.0), ScalarField.from_expr("sin(x)*cos(y)"))
    p = (0.4, -0.7)
    for k, var in enumerate("xy"):
        fd = central_diff(lambda x, y: float(eta(x, y)), p, var)
        assert eta.grad(*p)[k] == pytest.approx(fd, abs=1e-7)


def test_eta_needs_star_shaped_domain():
    s = ConformalSurface(Rect(1.0, 2.0, 1.0, 2.0), ScalarField.constant(1.0))
    with pytest.raises(DomainError):
        eta_field(s, ScalarField.constant(1.0))


def test_model_from_zero_tau_is_product():
    m = model_from_tau(flat(), "0")
    x, y = unit_points(10)
    np.testing.assert_array_equal(m.a(x, y), 0.0)
    np.testing.assert_array_equal(m.b(x, y), 0.0)


@pytest.mark.parametrize("kappa, tau0", [(0.0, 0.5), (-1.0, 0.3), (4.0, 1.0)])
def test_model_from_constant_tau_is_the_preset(kappa, tau0):
    built = model_from_tau(lambda_kappa_surface(kappa), ScalarField.constant(tau0))
    preset = eck_preset(kappa, tau0)
    for p in [(0.2, 0.3, 0.0), (-0.8, 0.5, 1.0)]:
        np.testing.assert_allclose(metric_at(built, p), metric_at(preset, p), atol=1e-10)


TAUS = ["0", "0.5", "x", "x^2 - y", "sin(x)*cos(y)"]
LAMBDAS = [0.0, -1.0, 1.0]


@pytest.mark.parametrize("tau", TAUS)
@pytest.mark.parametrize("kappa", LAMBDAS)
def test_tau_round_trip(tau, kappa):
    s = lambda_kappa_surface(kappa)
    t = ScalarField.from_expr(tau)
    m = model_from_tau(s, t)
    x, y = unit_points(50, seed=11, radius=1.5)
    np.testing.assert_allclose(bundle_curvature(m, (x, y)), t(x, y) + 0 * x, atol=1e-6)


def test_from_tau_model_with_disk_domain():
    s = ConformalSurface(Disk(1.0), ScalarField.from_expr("1 + x^2"))
    m = model_from_tau(s, "x*y")
    assert float(bundle_curvature(m, (0.3, 0.4))) == pytest.approx(0.12, abs=1e-6)


# -- gauge shifts ------------------------------------------------------------

def test_constant_gauge_is_identity():
    m = eck_preset(0.0, 0.5)
    m1 = gauge_shift(m, "3.5")
    for p in [(0.1, 0.2), (-1.0, 0.7)]:
        assert m1.a(*p) == m.a(*p)
        assert m1.b(*p) == m.b(*p)


def test_gauge_xy_shifts_coefficients():
    m = tau_x_model()
    m1 = gauge_shift(m, "x*y")
    x, y = unit_points(20)
    np.testing.assert_allclose(m1.a(x, y), m.a(x, y) + y, atol=1e-15)
    np.testing.assert_allclose(m1.b(x, y), m.b(x, y) + x, atol=1e-15)
    np.testing.assert_allclose(bundle_curvature(m1, (x, y)), bundle_curvature(m, (x, y)),
                               atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(c=st.lists(st.floats(-2, 2), min_size=5, max_size=5), x=st.floats(-1, 1),
       y=st.floats(-1, 1), z=st.floats(-1, 1), i=st.integers(0, len(MODELS) - 1))
def test_gauge_invariance_and_isometry(c, x, y, z, i):
    d = f"{c[0]}*x^2 + {c[1]}*x*y + {c[2]}*y^3 + {c[3]}*x + {c[4]}*y"
    m0 = MODELS[i]
    m1 = gauge_shift(m0, d)
    assert abs(bundle_curvature(m1, (x, y)) - bundle_curvature(m0, (x, y))) <= 1e-8
    f, df = gauge_map(d)
    p = (x, y, z)
    J = df(p)
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=3), rng.normal(size=3)
    direct = u @ metric_at(m0, p) @ v
    pulled = (J @ u) @ metric_at(m1, f(p)) @ (J @ v)
    assert abs(pulled - direct) <= 1e-9 * max(1.0, abs(direct))
