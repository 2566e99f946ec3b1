"""Connection, curvature and homogeneity of canonical models.

Closed forms in the orthonormal frame ``{E1, E2, E3}`` sit next to a generic
finite-difference oracle (Christoffel symbols from the coordinate metric,
Riemann tensor from the Christoffel symbols) that knows nothing about
Killing submersions and is used to cross-check them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .model import KillingModel, Point3, bundle_curvature, frame_at, metric_at, tau_gradient
from .surface import gaussian_curvature

__all__ = [
    "PlaneSpec", "ECK", "NotConstant", "connection_table", "make_plane", "sectional",
    "ricci", "scalar_curvature", "fd_christoffel", "fd_connection_table",
    "fd_riemann_oracle", "classify_homogeneous", "horizontal_tau_gradient",
]

METRIC_FD_STEP = 1e-4
CHRISTOFFEL_FD_STEP = 1e-3


# ---------------------------------------------------------------------------
# Closed forms

def connection_table(m: KillingModel, p) -> np.ndarray:
    """``c[i, j, k] = <nabla_{E_i} E_j, E_k>`` (0-based indices)."""
    x, y = float(p[0]), float(p[1])
    m.check_interior(x, y)
    lam = float(m.lam(x, y))
    lx, ly = (float(v) for v in m.lam.grad(x, y))
    tau = float(bundle_curvature(m, (x, y)))
    px, py = lx / lam**2, ly / lam**2
    c = np.zeros((3, 3, 3))
    c[0, 0, 1], c[0, 1, 0] = -py, py
    c[0, 1, 2], c[0, 2, 1] = tau, -tau
    c[1, 0, 1], c[1, 1, 0] = px, -px
    c[1, 0, 2], c[1, 2, 0] = -tau, tau
    c[2, 0, 1], c[2, 1, 0] = -tau, tau
    return c


def horizontal_tau_gradient(m: KillingModel, p) -> np.ndarray:
    """Frame components of the gradient of ``tau`` on the total space.

    ``tau`` does not depend on ``z``, so the gradient is horizontal with
    components ``(E1 tau, E2 tau, 0) = (tau_x, tau_y, 0) / lambda``.
    """
    x, y = float(p[0]), float(p[1])
    tx, ty = tau_gradient(m, (x, y))
    lam = float(m.lam(x, y))
    return np.array([float(tx) / lam, float(ty) / lam, 0.0])


def _frame_components(m: KillingModel, p, v) -> np.ndarray:
    g = metric_at(m, p)
    E = frame_at(m, p).matrix()
    return E.T @ g @ np.asarray(v, dtype=float)


@dataclass(frozen=True)
class PlaneSpec:
    """Tangent plane at ``point`` with unit normal ``normal`` (coordinate
    components); ``nu = <normal, xi>`` with ``xi = d_z``."""

    point: Point3
    normal: np.ndarray
    nu: float


def make_plane(m: KillingModel, point, normal, *, tol: float = 1e-6) -> PlaneSpec:
    """Build a :class:`PlaneSpec`; a normal within ``tol`` of unit length is
    normalised, anything further off is rejected."""
    point = Point3(*map(float, point))
    n = np.asarray(normal, dtype=float)
    g = metric_at(m, point)
    norm = float(np.sqrt(n @ g @ n))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"plane normal has metric norm {norm}, expected 1")
    n = n / norm
    return PlaneSpec(point, n, float(n @ g @ np.array([0.0, 0.0, 1.0])))


def _invariants(m: KillingModel, p) -> tuple[float, float, np.ndarray]:
    x, y = float(p[0]), float(p[1])
    km = float(gaussian_curvature(m.surface, (x, y)))
    tau = float(bundle_curvature(m, (x, y)))
    return km, tau, horizontal_tau_gradient(m, (x, y))


def sectional(m: KillingModel, plane: PlaneSpec) -> float:
    """Sectional curvature of a plane given by its unit normal ``N``::

        nu^2 (K_M - 3 tau^2) + (1 - nu^2) tau^2 - 2 nu <N x xi, grad tau>

    with the cross product taken in the positively oriented frame.
    """
    km, tau, gt = _invariants(m, plane.point)
    n = _frame_components(m, plane.point, plane.normal)
    norm = float(np.linalg.norm(n))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"plane normal has metric norm {norm}, expected 1")
    n = n / norm
    nu = n[2]
    cross = np.array([n[1], -n[0], 0.0])  # N x E3
    return float(nu**2 * (km - 3 * tau**2) + (1 - nu**2) * tau**2 - 2 * nu * (cross @ gt))


def ricci(m: KillingModel, p, v) -> float:
    """Ricci curvature ``Ric(v)`` of a unit vector ``v`` (coordinate components)."""
    km, tau, gt = _invariants(m, p)
    w = _frame_components(m, p, v)
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"vector has metric norm {norm}, expected 1")
    s = w[2]
    cross = np.array([w[1], -w[0], 0.0])  # v x E3
    return float((km - 2 * tau**2) - s**2 * (km - 4 * tau**2) + 2 * s * (cross @ gt))


def scalar_curvature(m: KillingModel, p) -> float:
    """``2 (K_M - tau^2)``."""
    x, y = float(p[0]), float(p[1])
    km = float(gaussian_curvature(m.surface, (x, y)))
    tau = float(bundle_curvature(m, (x, y)))
    return 2.0 * (km - tau * tau)


# ---------------------------------------------------------------------------
# Finite-difference oracle

def fd_christoffel(m: KillingModel, p, h: float = METRIC_FD_STEP) -> np.ndarray:
    """``G[a, b, c] = Gamma^a_{bc}`` from central differences of the coordinate metric."""
    p = np.asarray(p, dtype=float)
    g = metric_at(m, p)
    dg = np.empty((3, 3, 3))  # dg[k] = d_k g
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        dg[k] = (metric_at(m, p + e) - metric_at(m, p - e)) / (2 * h)
    # lower[d, b, c] = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    lower = 0.5 * (np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg)
    return np.einsum("ad,dbc->abc", np.linalg.inv(g), lower)


def fd_riemann(m: KillingModel, p, h_metric: float = METRIC_FD_STEP,
               h_chris: float = CHRISTOFFEL_FD_STEP) -> np.ndarray:
    """``R[a, b, c, d] = R^a_{bcd}`` with ``R(d_c, d_d) d_b = R^a_{bcd} d_a``."""
    p = np.asarray(p, dtype=float)
    G = fd_christoffel(m, p, h_metric)
    dG = np.empty((3, 3, 3, 3))  # dG[k, a, b, c] = d_k Gamma^a_{bc}
    for k in range(3):
        e = np.zeros(3)
        e[k] = h_chris
        dG[k] = (fd_christoffel(m, p + e, h_metric) - fd_christoffel(m, p - e, h_metric)) / (2 * h_chris)
    return (np.einsum("cadb->abcd", dG) - np.einsum("dacb->abcd", dG)
            + np.einsum("ace,edb->abcd", G, G) - np.einsum("ade,ecb->abcd", G, G))


def fd_riemann_oracle(m: KillingModel, p, u, v, h_metric: float = METRIC_FD_STEP,
                      h_chris: float = CHRISTOFFEL_FD_STEP) -> float:
    """Sectional curvature of ``span(u, v)`` computed generically:
    ``<R(u, v) v, u> / (|u|^2 |v|^2 - <u, v>^2)``."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    g = metric_at(m, p)
    denom = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    if denom < 1e-12:
        raise ValueError("degenerate plane")
    R = fd_riemann(m, p, h_metric, h_chris)
    Ruvv = np.einsum("abcd,b,c,d->a", R, v, u, v)
    return float(u @ g @ Ruvv / denom)


def fd_connection_table(m: KillingModel, p, h_metric: float = METRIC_FD_STEP,
                        h_frame: float = 1e-5) -> np.ndarray:
    """``<nabla_{E_i} E_j, E_k>`` from FD Christoffel symbols and FD frame derivatives."""
    p = np.asarray(p, dtype=float)
    G = fd_christoffel(m, p, h_metric)
    g = metric_at(m, p)
    E = frame_at(m, p).matrix()
    dE = np.empty((3, 3, 3))  # dE[k] = d_k E (columns are frame vectors)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h_frame
        dE[k] = (frame_at(m, p + e).matrix() - frame_at(m, p - e).matrix()) / (2 * h_frame)
    c = np.empty((3, 3, 3))
    for i in range(3):
        for j in range(3):
            cov = np.einsum("k,kc->c", E[:, i], dE[:, :, j]) + np.einsum("abc,b,c->a", G, E[:, i], E[:, j])
            c[i, j] = E.T @ g @ cov
    return c


# ---------------------------------------------------------------------------
# Homogeneity

@dataclass(frozen=True)
class ECK:
    """Constant Gaussian and bundle curvature on the sample grid."""

    kappa: float
    tau: float
    kappa_range: float
    tau_range: float


@dataclass(frozen=True)
class NotConstant:
    """At least one of ``K_M`` and ``tau`` varies by more than the tolerance."""

    kappa_range: float
    tau_range: float
    kappa_varies: bool
    tau_varies: bool
    tol: float

    @property
    def report(self) -> str:
        parts = []
        if self.kappa_varies:
            parts.append(f"K_M varies by {self.kappa_range:.6g}")
        if self.tau_varies:
            parts.append(f"tau varies by {self.tau_range:.6g}")
        return "; ".join(parts) + f" (tol {self.tol:g})"


Classification = Union[ECK, NotConstant]


def classify_homogeneous(m: KillingModel, grid: Sequence[Sequence[float]],
                         tol: float = 1e-6) -> Classification:
    """Check whether ``K_M`` and ``tau`` are constant over ``grid``.

    Returns :class:`ECK` with the mean values when both ranges are within
    ``tol``; otherwise :class:`NotConstant` listing both ranges.  No nearest
    ``E(kappa, tau)`` is guessed.
    """
    pts = np.asarray(grid, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 25:
        raise ValueError("need at least 25 grid points")
    X, Y = pts[:, 0], pts[:, 1]
    m.check_interior(X, Y)
    K = np.asarray(gaussian_curvature(m.surface, (X, Y)), dtype=float) * np.ones_like(X)
    T = np.asarray(bundle_curvature(m, (X, Y)), dtype=float) * np.ones_like(X)
    k_range = float(K.max() - K.min())
    t_range = float(T.max() - T.min())
    if k_range <= tol and t_range <= tol:
        return ECK(float(K.mean()), float(T.mean()), k_range, t_range)
    return NotConstant(k_range, t_range, k_range > tol, t_range > tol, tol)
