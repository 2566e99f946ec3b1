import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ksub import paths as pa
from ksub.exprfield import ScalarField
from ksub.model import bundle_curvature, canonical_model, eck_preset, model_from_tau
from ksub.surface import ConformalSurface, DomainError, Plane
from ksub.verify import generic_model, tau_x_model


def flat():
    return ConformalSurface(Plane(), ScalarField.constant(1.0))


# -- curves --------------------------------------------------------------------

def test_circle_is_closed_with_region():
    c = pa.circle((1.0, -2.0), 0.5)
    assert c.enclosed_region.center == (1.0, -2.0)
    assert c.enclosed_region.radius == 0.5


def test_open_curve_rejected_as_closed():
    with pytest.raises(ValueError):
        pa.ClosedCurve2(pa.curve_from_exprs("t", "0", 0.0, 1.0))


def test_curve_from_exprs_exact_velocity():
    c = pa.curve_from_exprs("t^2", "sin(t)", 0.0, 1.0)
    xd, yd = c.derivative(np.array([0.5]), 1e-4)
    assert xd[0] == pytest.approx(1.0, abs=1e-15)
    assert yd[0] == pytest.approx(math.cos(0.5), abs=1e-15)


# -- horizontal lifts ----------------------------------------------------------

def test_lift_in_product_stays_level():
    m = canonical_model(flat(), "0", "0")
    path = pa.horizontal_lift(m, pa.curve_from_exprs("t", "t^2", 0.0, 2.0), z0=1.25)
    np.testing.assert_array_equal(path.points[:, 2], 1.25)


def test_lift_of_unit_circle_in_heisenberg():
    m = eck_preset(0.0, 0.5)
    path = pa.horizontal_lift(m, pa.circle((0, 0), 1.0).curve, 0.0, 1e-3)
    assert abs(path.points[-1, 2]) == pytest.approx(math.pi, abs=1e-9)


def test_lift_is_deterministic():
    m = generic_model()
    c = pa.circle((0.2, 0.1), 0.7).curve
    a = pa.horizontal_lift(m, c, 0.3, 1e-3)
    b = pa.horizontal_lift(m, c, 0.3, 1e-3)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.times, b.times)


@pytest.mark.parametrize("m", [eck_preset(0.0, 0.5), tau_x_model(), generic_model()])
def test_lift_is_horizontal(m):
    path = pa.horizontal_lift(m, pa.curve_from_exprs("cos(t) + 0.1*t", "sin(2*t)", 0.0, 3.0),
                              0.0, 1e-3)
    t, vel = pa.fd_velocity(path.times, path.points)
    idx = np.searchsorted(path.times, t)
    vert, _ = pa.vertical_products(m, path.points[idx], vel)
    assert np.max(np.abs(vert)) <= 1e-6


def test_lift_with_finite_difference_velocity():
    m = eck_preset(0.0, 0.5)
    exact = pa.circle((0, 0), 1.0).curve
    no_vel = pa.PlaneCurve(exact.position, exact.t0, exact.t1)
    z_exact = pa.horizontal_lift(m, exact, 0.0, 1e-3).points[-1, 2]
    z_fd = pa.horizontal_lift(m, no_vel, 0.0, 1e-3).points[-1, 2]
    assert z_fd == pytest.approx(z_exact, abs=1e-6)


def test_lift_leaving_domain_raises():
    m = eck_preset(-1.0, 0.2)
    with pytest.raises(DomainError):
        pa.horizontal_lift(m, pa.curve_from_exprs("t", "0", 0.0, 3.0))


# -- holonomy ------------------------------------------------------------------

def test_holonomy_zero_in_product():
    m = canonical_model(flat(), "0", "0")
    rep = pa.holonomy_report(m, pa.circle((0.3, 0.3), 1.0))
    assert rep["gap"] == 0.0
    assert rep["residual"] <= 1e-12


@pytest.mark.parametrize("radius, expected, tol", [(1.0, math.pi, 1e-5),
                                                   (2.0, 4 * math.pi, 1e-4)])
def test_holonomy_gap_heisenberg(radius, expected, tol):
    gap = pa.holonomy_gap(eck_preset(0.0, 0.5), pa.circle((0, 0), radius), 1e-4)
    assert abs(gap - expected) <= tol


def test_holonomy_sign_follows_orientation():
    m = eck_preset(0.0, 0.5)
    ccw = pa.holonomy_signed(m, pa.circle((0, 0), 1.0))
    cw = pa.holonomy_signed(m, pa.circle((0, 0), 1.0, clockwise=True))
    assert ccw > 0 > cw
    assert ccw == pytest.approx(-cw, abs=1e-12)


@pytest.mark.parametrize("tau0, center, radius", [(0.5, (0.0, 0.0), 1.0),
                                                  (-0.8, (1.0, 2.0), 0.7),
                                                  (1.3, (-2.0, 0.5), 1.5)])
def test_verify_holonomy_heisenberg_family(tau0, center, radius):
    assert pa.verify_holonomy(eck_preset(0.0, tau0), pa.circle(center, radius), 1e-3) <= 1e-5


def test_verify_holonomy_non_constant_tau():
    m = model_from_tau(flat(), "x")
    assert pa.verify_holonomy(m, pa.circle((1.0, 0.0), 0.5), 1e-3) <= 1e-4


def test_verify_holonomy_hyperbolic():
    m = eck_preset(-1.0, 0.4)
    assert pa.verify_holonomy(m, pa.circle((0.3, -0.2), 1.0), 1e-3) <= 1e-5


def test_holonomy_region_outside_domain():
    with pytest.raises(DomainError):
        pa.holonomy_report(eck_preset(-1.0, 0.3), pa.circle((1.5, 0.0), 1.0))


# -- geodesics -----------------------------------------------------------------

def test_flat_geodesic_projection_is_straight():
    m = canonical_model(flat(), "0", "0")
    traj = pa.geodesic_project(m, (0.0, 0.0), 0.3, 0.0, 5.0)
    np.testing.assert_array_equal(traj.states[:, 2], 0.3)
    np.testing.assert_allclose(traj.states[-1, :2], [5 * math.cos(0.3), 5 * math.sin(0.3)],
                               atol=1e-12)


def test_heisenberg_projection_is_unit_circle():
    m = eck_preset(0.0, 0.5)
    traj = pa.geodesic_project(m, (0.0, 0.0), 0.0, 1.0, 2 * math.pi)
    assert np.max(np.abs(traj.states[-1, :2])) <= 1e-6
    # Circle of radius 1 through the origin: centre at distance 1.
    centre = np.array([0.0, 1.0])
    dist = np.linalg.norm(traj.states[:, :2] - centre, axis=1)
    assert np.max(np.abs(dist - 1.0)) <= 1e-9


def test_hyperbolic_projection_is_a_geodesic():
    m = eck_preset(-1.0, 0.0)
    traj = pa.geodesic_project(m, (0.2, -0.1), 1.0, 0.8, 3.0)
    t, kg = pa.base_geodesic_curvature(m, traj.times, traj.states[:, :2])
    assert np.max(np.abs(kg)) <= 1e-6


@pytest.mark.parametrize("m, mu", [(eck_preset(0.0, 0.5), 1.0), (tau_x_model(), 0.7),
                                   (eck_preset(4.0, 1.0), -0.4), (generic_model(), 0.5)])
def test_projection_curvature_is_two_mu_tau(m, mu):
    traj = pa.geodesic_project(m, (0.1, 0.2), 0.5, mu, 4.0)
    t, kg = pa.base_geodesic_curvature(m, traj.times, traj.states[:, :2])
    idx = np.searchsorted(traj.times, t)
    tau = bundle_curvature(m, (traj.states[idx, 0], traj.states[idx, 1]))
    assert np.max(np.abs(kg - 2 * mu * tau)) <= 1e-4


def test_flat_geodesic_is_straight_line():
    path = pa.geodesic(eck_preset(0.0, 0.0), (1.0, 2.0, 3.0), 0.0, 0.0, 2.0)
    np.testing.assert_allclose(path.points[-1], [3.0, 2.0, 3.0], atol=1e-12)
    assert path.complete


def test_vertical_geodesic_follows_fiber():
    path = pa.geodesic(eck_preset(0.0, 0.5), (0.5, -0.5, 1.0), 0.0, 0.0, 2.0, vertical=True)
    np.testing.assert_array_equal(path.points[:, 0], 0.5)
    np.testing.assert_array_equal(path.points[:, 1], -0.5)
    np.testing.assert_allclose(path.points[:, 2], 1.0 + path.times, atol=0)


@pytest.mark.parametrize("m, mu, start", [
    (eck_preset(0.0, 0.5), 1.0, (0.0, 0.0, 0.0)),
    (eck_preset(-1.0, 0.0), 0.6, (0.1, 0.0, 0.0)),
    (eck_preset(4.0, 1.0), -1.2, (0.3, 0.3, 1.0)),
    (tau_x_model(), 0.5, (0.0, 0.2, 0.0)),
])
def test_geodesic_conservation(m, mu, start):
    path = pa.geodesic(m, start, 0.4, mu, 10.0, 1e-3)
    assert path.complete
    t, vel = pa.fd_velocity(path.times, path.points)
    idx = np.searchsorted(path.times, t)
    vert, norm2 = pa.vertical_products(m, path.points[idx], vel)
    assert np.max(np.abs(vert - mu)) <= 1e-7
    assert np.max(np.abs(norm2 - (1 + mu * mu))) <= 1e-6


def test_geodesic_is_deterministic():
    m = generic_model()
    a = pa.geodesic(m, (0.1, 0.1, 0.0), 1.0, 0.3, 3.0)
    b = pa.geodesic(m, (0.1, 0.1, 0.0), 1.0, 0.3, 3.0)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.theta, b.theta)


def test_batched_geodesics_match_individual():
    m = eck_preset(4.0, 1.0)
    starts = [(0.0, 0.0, 0.0), (0.5, -0.2, 1.0)]
    batch = pa.geodesics(m, starts, [0.1, 2.0], [0.5, -1.0], 3.0)
    for path, s, th, mu in zip(batch, starts, [0.1, 2.0], [0.5, -1.0]):
        single = pa.geodesic(m, s, th, mu, 3.0)
        np.testing.assert_allclose(path.points, single.points, atol=1e-12)


def test_geodesic_exit_returns_partial_path():
    m = eck_preset(-1.0, 0.0)
    path = pa.geodesic(m, (1.8, 0.0, 0.0), 0.0, 0.0, 10.0)
    assert not path.complete
    assert path.times[-1] == path.exit_time < 10.0
    assert np.all(np.hypot(path.points[:, 0], path.points[:, 1]) < 2.0)


def test_theta_is_unwrapped():
    traj = pa.geodesic_project(eck_preset(0.0, 0.5), (0.0, 0.0), 0.0, 1.0, 4 * math.pi)
    assert traj.states[-1, 2] == pytest.approx(4 * math.pi, abs=1e-6)


@pytest.mark.parametrize("mu, vertical, kind, comp", [
    (0.0, False, "horizontal", 0.0),
    (1.0, False, "slanted", 1 / math.sqrt(2)),
    (5.0, True, "vertical", 1.0),
])
def test_classify_geodesic(mu, vertical, kind, comp):
    g = pa.classify_geodesic(mu, vertical)
    assert g.kind == kind
    assert g.vertical_component == pytest.approx(comp, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(-100, 100))
def test_slanted_component_in_unit_interval(mu):
    g = pa.classify_geodesic(mu)
    assert -1.0 < g.vertical_component < 1.0
    assert 0.0 <= g.angle <= math.pi / 2


def test_csv_output():
    path = pa.geodesic(eck_preset(0.0, 0.0), (0.0, 0.0, 0.0), 0.0, 0.0, 0.002, 1e-3)
    buf = io.StringIO()
    pa.write_csv(path, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x,y,z,theta"
    assert len(lines) == 4
    assert lines[2] == "0.001,0.001,0,0,0"


def test_csv_vertical_theta_is_nan():
    buf = io.StringIO()
    pa.write_csv(pa.vertical_geodesic((0, 0, 0), 0.001, 1e-3), buf)
    assert buf.getvalue().splitlines()[1].endswith(",nan")
