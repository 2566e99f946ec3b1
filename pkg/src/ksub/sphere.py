"""Killing submersions over the round sphere ``S^2(kappa)``.

``S^2(kappa)`` is the sphere of radius ``1/sqrt(kappa)`` in R^3.  Two planar
charts are used: :func:`stereographic`, and the chart
:func:`chart_point` ``(u, v) -> stereographic(u/2, v/2)``, whose pulled-back
metric is ``lambda_kappa^2 (du^2 + dv^2)`` with ``lambda_kappa = 1/(1 +
kappa (u^2 + v^2)/4)``.  Functions on the sphere handed over "in the chart"
always mean the second one.

``S^3`` is carried as R^4 with coordinates ``(x1, y1, x2, y2)`` standing for
``(z, w) = (x1 + i y1, x2 + i y2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .exprfield import Expr, ScalarField, compile_expr, differentiate, parse_expr
from .numerics import DiskRegion, quad_annulus, quad_disk

__all__ = [
    "SpherePoint", "S3Point", "AmbientField", "YFrame", "ChartSingularityError",
    "stereographic", "chart_point", "chart_inverse", "chart_lambda", "tau_ambient",
    "tau_in_chart", "total_bundle_curvature", "hopf_projection", "fiber_rotation",
    "y_frame", "s3_metric_at", "s3_point", "sphere_point", "hopf_differential",
    "W_THRESHOLD",
]

W_THRESHOLD = 1e-6
AMBIENT_FD_STEP = 1e-5
CONVERGENCE_TOL = 1e-6
MAX_RADIUS_FACTOR = 1e4
CONDITION_LIMIT = 1e8
TANGENCY_TOL = 1e-10


class ChartSingularityError(ValueError):
    """The point is too close to the fiber ``w = 0`` where the frame formula is singular."""


class SpherePoint(NamedTuple):
    p1: float
    p2: float
    p3: float


class S3Point(NamedTuple):
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def z(self) -> complex:
        return complex(self.x1, self.y1)

    @property
    def w(self) -> complex:
        return complex(self.x2, self.y2)


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not kappa > 0:
        raise ValueError(f"need kappa > 0, got {kappa}")
    return kappa


def sphere_point(kappa: float, p, tol: float = 1e-12) -> SpherePoint:
    """Validate ``|p|^2 = 1/kappa`` (relative tolerance ``tol``)."""
    kappa = _check_kappa(kappa)
    p = SpherePoint(*map(float, p))
    if abs(kappa * (p.p1**2 + p.p2**2 + p.p3**2) - 1.0) > tol:
        raise ValueError(f"{p} is not on S^2({kappa})")
    return p


def s3_point(p, tol: float = 1e-12) -> S3Point:
    """Validate ``|z|^2 + |w|^2 = 1``."""
    p = S3Point(*map(float, p))
    if abs(sum(c * c for c in p) - 1.0) > tol:
        raise ValueError(f"{p} is not on S^3")
    return p


# ---------------------------------------------------------------------------
# Charts

def stereographic(kappa: float, u, v):
    """Inverse stereographic projection from the north pole ``(0, 0, 1/sqrt(kappa))``.

    Scalars give a :class:`SpherePoint`; arrays give a tuple of arrays.
    """
    kappa = _check_kappa(kappa)
    r2 = np.multiply(u, u) + np.multiply(v, v)
    d = kappa * r2 + 1.0
    out = (2.0 * np.asarray(u) / d, 2.0 * np.asarray(v) / d,
           (kappa * r2 - 1.0) / (d * math.sqrt(kappa)))
    if np.ndim(out[0]) == 0:
        return SpherePoint(*map(float, out))
    return out


def chart_point(kappa: float, u, v):
    """The conformal chart with factor ``lambda_kappa``: ``stereographic(u/2, v/2)``."""
    return stereographic(kappa, np.multiply(u, 0.5), np.multiply(v, 0.5))


def chart_inverse(kappa: float, p) -> tuple[float, float]:
    """``(u, v)`` with ``chart_point(kappa, u, v) = p``; undefined at the north pole."""
    kappa = _check_kappa(kappa)
    d = 1.0 - math.sqrt(kappa) * p[2]
    return 2.0 * p[0] / d, 2.0 * p[1] / d


def chart_lambda(kappa: float, u, v):
    return 1.0 / (1.0 + 0.25 * kappa * (np.multiply(u, u) + np.multiply(v, v)))


# ---------------------------------------------------------------------------
# Bundle curvature from ambient coefficients

class AmbientField:
    """A function of ``(x, y, z)`` in R^3 with its gradient.

    Built from an expression (exact derivatives) or from a callable
    (central differences with step ``1e-5``).
    """

    def __init__(self, source: Union[str, Expr, Callable, float, int]):
        names = ("x", "y", "z")
        if isinstance(source, (int, float)):
            source = repr(float(source))
        if isinstance(source, str):
            source = parse_expr(source, names)
        if callable(source):
            f = source
            self._f = f

            def grad(x, y, z, h=AMBIENT_FD_STEP):
                return ((f(x + h, y, z) - f(x - h, y, z)) / (2 * h),
                        (f(x, y + h, z) - f(x, y - h, z)) / (2 * h),
                        (f(x, y, z + h) - f(x, y, z - h)) / (2 * h))

            self._grad = grad
            self.exact = False
        else:
            self._f = compile_expr(source, names)
            parts = [compile_expr(differentiate(source, n), names) for n in names]
            self._grad = lambda x, y, z: tuple(p(x, y, z) for p in parts)
            self.exact = True

    def __call__(self, x, y, z):
        return self._f(x, y, z)

    def grad(self, x, y, z):
        return self._grad(x, y, z)


def _ambient(f) -> AmbientField:
    return f if isinstance(f, AmbientField) else AmbientField(f)


def tau_ambient(kappa: float, a1, a2, a3, p):
    """Bundle curvature at ``p`` on ``S^2(kappa)`` of the Killing submersion
    defined on ``S^2(kappa) x R`` by ambient coefficients ``a1, a2, a3``::

        2 tau = sqrt(kappa) (y a3_x - z a2_x + z a1_y - x a3_y + x a2_z - y a1_z)

    Each coefficient may be an expression in ``x, y, z``, a callable, or an
    :class:`AmbientField`.  ``p`` may hold arrays.
    """
    kappa = _check_kappa(kappa)
    x, y, z = p[0], p[1], p[2]
    g1 = _ambient(a1).grad(x, y, z)
    g2 = _ambient(a2).grad(x, y, z)
    g3 = _ambient(a3).grad(x, y, z)
    curl_term = (y * g3[0] - z * g2[0] + z * g1[1] - x * g3[1] + x * g2[2] - y * g1[2])
    out = 0.5 * math.sqrt(kappa) * curl_term
    return float(out) if np.ndim(out) == 0 else out


def tau_in_chart(kappa: float, a1, a2, a3) -> Callable:
    """``(u, v) -> tau_ambient(chart_point(u, v))`` for arrays."""
    fields = [_ambient(a) for a in (a1, a2, a3)]

    def tau(u, v):
        return tau_ambient(kappa, *fields, chart_point(kappa, np.asarray(u, float),
                                                        np.asarray(v, float)))

    return tau


def total_bundle_curvature(kappa: float, tau_chart, n: int = 32) -> float:
    """``integral over R^2 of tau(u, v) lambda_kappa(u, v)^2 du dv``.

    Integrates a disk of radius ``2/sqrt(kappa)`` then annuli of doubling
    outer radius until an annulus contributes less than ``1e-6``.  The area
    element decays like ``r^-4``, so the neglected tail is a third of the last
    contribution at most for bounded ``tau``.
    """
    kappa = _check_kappa(kappa)
    f = tau_chart if not isinstance(tau_chart, ScalarField) else tau_chart.__call__

    def integrand(u, v):
        return np.asarray(f(u, v), dtype=float) * chart_lambda(kappa, u, v) ** 2

    r0 = 2.0 / math.sqrt(kappa)
    total = quad_disk(integrand, DiskRegion((0.0, 0.0), r0), n, n)
    r = r0
    while r < MAX_RADIUS_FACTOR * r0:
        piece = quad_annulus(integrand, (0.0, 0.0), r, 2.0 * r, n, n)
        total += piece
        r *= 2.0
        if abs(piece) < CONVERGENCE_TOL:
            return float(total)
    raise ArithmeticError(f"total bundle curvature did not converge by radius {r:g}")


# ---------------------------------------------------------------------------
# Hopf fibration and the S^3 frame

def hopf_projection(p, kappa: float) -> SpherePoint:
    """``(z, w) -> (2 z conj(w), |z|^2 - |w|^2) / sqrt(kappa)``."""
    kappa = _check_kappa(kappa)
    x1, y1, x2, y2 = (float(c) for c in p)
    s = 1.0 / math.sqrt(kappa)
    # 2 z conj(w) = 2 (x1 x2 + y1 y2) + 2 i (y1 x2 - x1 y2)
    return SpherePoint(2.0 * (x1 * x2 + y1 * y2) * s, 2.0 * (y1 * x2 - x1 * y2) * s,
                       (x1 * x1 + y1 * y1 - x2 * x2 - y2 * y2) * s)


def fiber_rotation(p, t: float) -> S3Point:
    """``(e^{it} z, e^{it} w)``."""
    c, s = math.cos(t), math.sin(t)
    x1, y1, x2, y2 = (float(v) for v in p)
    return S3Point(c * x1 - s * y1, s * x1 + c * y1, c * x2 - s * y2, s * x2 + c * y2)


def hopf_differential(p, u, kappa: float, h: float = 1e-6) -> np.ndarray:
    """Central difference of :func:`hopf_projection` along ``u``."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    return (np.array(hopf_projection(p + h * u, kappa))
            - np.array(hopf_projection(p - h * u, kappa))) / (2.0 * h)


def _base_frame(p) -> np.ndarray:
    """Rows ``E1 = (-conj w, conj z)``, ``E2 = (-i conj w, i conj z)``,
    ``E3 = (i z, i w)`` in R^4 coordinates."""
    x1, y1, x2, y2 = (float(c) for c in p)
    return np.array([
        [-x2, y2, x1, -y1],
        [-y2, -x2, y1, x1],
        [-y1, x1, -y2, x2],
    ])


@dataclass(frozen=True)
class YFrame:
    """The declared-orthonormal frame at ``point``; ``vectors[i]`` is ``Y_{i+1}``
    in R^4 and ``coefficients[i, j]`` its component along ``E_{j+1}``."""

    point: S3Point
    vectors: np.ndarray
    coefficients: np.ndarray
    base: np.ndarray


def y_frame(kappa: float, T: float, eta, p) -> YFrame:
    """Frame ``Y1, Y2, Y3`` on S^3 determining the metric of the Killing
    submersion over ``S^2(kappa)`` with total bundle curvature ``T``::

        Y1 = (sqrt(kappa)/2) E1 - c E3,  Y2 = (sqrt(kappa)/2) E2 + c E3,
        Y3 = (pi/T) E3,
        c = Im(z w) (kappa T |w|^2 - 4 pi eta) / (2 pi sqrt(kappa) |w|^4)

    ``eta`` is a function of the chart coordinates ``(u, v)`` (a
    :class:`ScalarField` or callable) evaluated at the chart coordinates of
    the Hopf image.  Points with ``|w|^2 < 1e-6`` are rejected.
    """
    kappa = _check_kappa(kappa)
    if T == 0:
        raise ValueError("total bundle curvature must be non-zero")
    p = s3_point(p)
    zc, wc = p.z, p.w
    w2 = abs(wc) ** 2
    if w2 < W_THRESHOLD:
        raise ChartSingularityError(f"|w|^2 = {w2:g} is below {W_THRESHOLD:g}")
    u, v = chart_inverse(kappa, hopf_projection(p, kappa))
    eta_val = float(eta(u, v))
    c = (zc * wc).imag * (kappa * T * w2 - 4.0 * math.pi * eta_val) / (
        2.0 * math.pi * math.sqrt(kappa) * w2 * w2)
    h = 0.5 * math.sqrt(kappa)
    coeffs = np.array([[h, 0.0, -c], [0.0, h, c], [0.0, 0.0, math.pi / T]])
    E = _base_frame(p)
    return YFrame(p, coeffs @ E, coeffs, E)


def s3_metric_at(frame: YFrame, u, v) -> float:
    """Metric product of tangent vectors ``u, v`` (R^4 components) at
    ``frame.point`` for which ``frame.vectors`` is orthonormal."""
    p = np.asarray(frame.point, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    for name, vec in (("u", u), ("v", v)):
        if abs(vec @ p) > TANGENCY_TOL * max(1.0, float(np.linalg.norm(vec))):
            raise ValueError(f"{name} is not tangent to S^3 at {frame.point}")
    cond = np.linalg.cond(frame.coefficients)
    if not cond <= CONDITION_LIMIT:
        raise ArithmeticError(f"frame is numerically degenerate (condition {cond:.3g})")
    # E is orthonormal in R^4, so E-components are plain dot products.
    cu = np.linalg.solve(frame.coefficients.T, frame.base @ u)
    cv = np.linalg.solve(frame.coefficients.T, frame.base @ v)
    return float(cu @ cv)
