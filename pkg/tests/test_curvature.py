import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ksub import curvature as cv
from ksub.exprfield import ScalarField
from ksub.model import bundle_curvature, canonical_model, eck_preset, frame_at, model_from_tau
from ksub.surface import ConformalSurface, Plane, gaussian_curvature, lambda_kappa_text
from ksub.verify import generic_model, tau_x_model

MODELS = [eck_preset(0.0, 0.5), eck_preset(-1.0, 0.3), eck_preset(4.0, 1.0),
          tau_x_model(), generic_model()]


def unit_vector(m, p, coeffs):
    """Unit vector with the given frame components (normalised)."""
    c = np.asarray(coeffs, dtype=float)
    return frame_at(m, p).matrix() @ (c / np.linalg.norm(c))


def plane_basis(m, p, normal):
    E = frame_at(m, p).matrix()
    n = np.linalg.solve(E, normal)
    q, _ = np.linalg.qr(np.column_stack([n, np.eye(3)]))
    return E @ q[:, 1], E @ q[:, 2]


# -- connection table ----------------------------------------------------------

def test_connection_table_euclidean():
    assert np.all(cv.connection_table(eck_preset(0.0, 0.0), (0.3, 0.1, 0.0)) == 0.0)


def test_connection_table_heisenberg():
    c = cv.connection_table(eck_preset(0.0, 0.5), (0.2, -0.4, 1.0))
    # c[i, j, k] = <nabla_{E_i} E_j, E_k>, zero-based.
    assert c[0, 2, 1] == pytest.approx(-0.5, abs=1e-15)
    assert c[1, 2, 0] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("m", MODELS)
def test_connection_table_structure(m):
    c = cv.connection_table(m, (0.3, -0.2, 0.0))
    np.testing.assert_array_equal(c, -c.transpose(0, 2, 1))
    np.testing.assert_array_equal(c[2, 2, :], 0.0)


@pytest.mark.parametrize("m", MODELS)
def test_connection_table_matches_christoffel_oracle(m):
    p = (0.35, -0.25, 0.4)
    np.testing.assert_allclose(cv.connection_table(m, p), cv.fd_connection_table(m, p), atol=1e-4)


# -- oracle --------------------------------------------------------------------

def test_oracle_euclidean():
    m = eck_preset(0.0, 0.0)
    assert abs(cv.fd_riemann_oracle(m, (0.1, 0.2, 0.3), [1, 0, 0], [0.3, 1, 2])) <= 1e-6


@pytest.mark.parametrize("coeffs", [(0, 0, 1), (1, 0, 0), (1, 2, 3)])
def test_oracle_round_berger(coeffs):
    m = eck_preset(4.0, 1.0)
    p = (0.3, 0.2, 0.0)
    u, v = plane_basis(m, p, unit_vector(m, p, coeffs))
    assert cv.fd_riemann_oracle(m, p, u, v) == pytest.approx(1.0, abs=1e-3)


def test_oracle_heisenberg_horizontal():
    m = eck_preset(0.0, 0.5)
    E = frame_at(m, (0.1, 0.1, 0.0)).matrix()
    assert cv.fd_riemann_oracle(m, (0.1, 0.1, 0.0), E[:, 0], E[:, 1]) == pytest.approx(-0.75,
                                                                                        abs=1e-3)


def test_oracle_degenerate_plane():
    with pytest.raises(ValueError):
        cv.fd_riemann_oracle(eck_preset(0.0, 0.0), (0, 0, 0), [1, 0, 0], [2, 0, 0])


# -- closed forms --------------------------------------------------------------

def test_sectional_horizontal_hyperbolic():
    m = eck_preset(-1.0, 0.0)
    p = (0.5, 0.2, 0.0)
    assert cv.sectional(m, cv.make_plane(m, p, [0, 0, 1])) == pytest.approx(-1.0, abs=1e-6)


def test_sectional_vertical_heisenberg():
    m = eck_preset(0.0, 0.5)
    p = (0.5, 0.2, 0.0)
    n = unit_vector(m, p, (1, 0, 0))
    assert cv.sectional(m, cv.make_plane(m, p, n)) == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("m", MODELS)
def test_sectional_special_planes_exact(m):
    p = (0.3, -0.4, 0.0)
    km = float(gaussian_curvature(m.surface, p[:2]))
    tau = float(bundle_curvature(m, p))
    E = frame_at(m, p).matrix()
    horiz = cv.sectional(m, cv.make_plane(m, p, E[:, 2]))
    assert abs(horiz - (km - 3 * tau * tau)) <= 1e-12
    for theta in np.linspace(0, math.pi, 5):
        n = math.cos(theta) * E[:, 0] + math.sin(theta) * E[:, 1]
        assert abs(cv.sectional(m, cv.make_plane(m, p, n)) - tau * tau) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(i=st.integers(0, len(MODELS) - 1), x=st.floats(-0.8, 0.8), y=st.floats(-0.8, 0.8),
       c=st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_vertical_planes_are_non_negative(i, x, y, c):
    m = MODELS[i]
    p = (x, y, 0.0)
    if math.hypot(*c) < 1e-3:
        c = [1.0, 0.0]
    n = unit_vector(m, p, (c[0], c[1], 0.0))
    assert cv.sectional(m, cv.make_plane(m, p, n)) >= 0.0


@pytest.mark.parametrize("seed", range(6))
def test_sectional_matches_oracle_non_constant_tau(seed):
    rng = np.random.default_rng(seed)
    m = tau_x_model() if seed % 2 == 0 else generic_model()
    p = (*rng.uniform(-0.8, 0.8, 2), 0.0)
    n = unit_vector(m, p, rng.normal(size=3))
    u, v = plane_basis(m, p, n)
    oracle = cv.fd_riemann_oracle(m, p, u, v)
    assert abs(cv.sectional(m, cv.make_plane(m, p, n)) - oracle) <= 1e-3 * (1 + abs(oracle))


def test_make_plane_rejects_non_unit_normal():
    m = eck_preset(0.0, 0.5)
    with pytest.raises(ValueError):
        cv.make_plane(m, (0, 0, 0), [0, 0, 2])


@pytest.mark.parametrize("kappa, tau0, expected", [(0.0, 0.5, 0.5), (4.0, 1.0, 2.0),
                                                   (-1.0, 0.0, 0.0)])
def test_ricci_vertical(kappa, tau0, expected):
    m = eck_preset(kappa, tau0)
    assert cv.ricci(m, (0.2, 0.1, 0.0), [0, 0, 1]) == pytest.approx(expected, abs=1e-9)


def test_ricci_horizontal_hyperbolic():
    m = eck_preset(-1.0, 0.0)
    p = (0.2, 0.1, 0.0)
    assert cv.ricci(m, p, unit_vector(m, p, (1, 1, 0))) == pytest.approx(-1.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_ricci_is_sum_of_oracle_sectionals(seed):
    rng = np.random.default_rng(seed)
    m = MODELS[3 + seed % 2]
    p = (*rng.uniform(-0.7, 0.7, 2), 0.0)
    E = frame_at(m, p).matrix()
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    v = E @ q[:, 0]
    oracle = sum(cv.fd_riemann_oracle(m, p, v, E @ q[:, j]) for j in (1, 2))
    assert abs(cv.ricci(m, p, v) - oracle) <= 1e-3 * (1 + abs(oracle))


@pytest.mark.parametrize("kappa, tau0, expected", [(0.0, 0.0, 0.0), (0.0, 0.5, -0.5),
                                                   (4.0, 1.0, 6.0)])
def test_scalar_curvature_presets(kappa, tau0, expected):
    assert cv.scalar_curvature(eck_preset(kappa, tau0), (0.4, -0.3, 0.0)) == pytest.approx(
        expected, abs=1e-6)


@pytest.mark.parametrize("m", MODELS)
def test_scalar_curvature_is_ricci_trace(m):
    p = (0.25, 0.5, 0.0)
    E = frame_at(m, p).matrix()
    trace = sum(cv.ricci(m, p, E[:, j]) for j in range(3))
    assert abs(trace - cv.scalar_curvature(m, p)) <= 1e-6


# -- homogeneity ---------------------------------------------------------------

def test_classifier_recognises_preset():
    m = eck_preset(-1.0, 0.3)
    res = cv.classify_homogeneous(m, m.surface.interior_grid(10))
    assert isinstance(res, cv.ECK)
    assert res.kappa == pytest.approx(-1.0, abs=1e-6)
    assert res.tau == pytest.approx(0.3, abs=1e-6)


def test_classifier_rejects_tau_x():
    flat = ConformalSurface(Plane(), ScalarField.constant(1.0))
    m = model_from_tau(flat, "x")
    grid = m.surface.interior_grid(10)
    res = cv.classify_homogeneous(m, grid)
    assert isinstance(res, cv.NotConstant)
    assert res.tau_varies and not res.kappa_varies
    extent = max(p[0] for p in grid) - min(p[0] for p in grid)
    assert res.tau_range == pytest.approx(extent, abs=1e-6)
    assert "tau varies" in res.report


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 2.0])
def test_classifier_product_over_lambda_kappa(kappa):
    from ksub.surface import lambda_kappa_surface

    s = lambda_kappa_surface(kappa)
    m = canonical_model(s, "0", "0")
    res = cv.classify_homogeneous(m, s.interior_grid(10))
    assert isinstance(res, cv.ECK)
    assert res.kappa == pytest.approx(kappa, abs=1e-6)
    assert res.tau == 0.0


def test_classifier_lambda_expression_model():
    s = ConformalSurface(Plane(), ScalarField.from_expr(lambda_kappa_text(1.0)))
    m = model_from_tau(s, "0.25")
    res = cv.classify_homogeneous(m, s.interior_grid(6))
    assert isinstance(res, cv.ECK)
    assert (res.kappa, res.tau) == pytest.approx((1.0, 0.25), abs=1e-6)


def test_classifier_needs_enough_points():
    m = eck_preset(0.0, 0.0)
    with pytest.raises(ValueError):
        cv.classify_homogeneous(m, m.surface.interior_grid(4))
