"""The canonical Killing submersion over a conformal domain.

A model is a triple ``(lambda, a, b)`` on a planar domain, giving the metric
on ``Omega x R``::

    lambda^2 (dx^2 + dy^2) + (dz - lambda (a dx + b dy))^2

with orthonormal frame ``E1 = (1/lambda) d_x + a d_z``,
``E2 = (1/lambda) d_y + b d_z``, ``E3 = d_z``.  The frame is declared
positively oriented; this fixes the sign of the bundle curvature ``tau``
(negate ``a`` and ``b`` to flip it).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .exprfield import BinOp, Num, ScalarField, Var, compile_exprs, differentiate
from .numerics import DEFAULT_QUAD_TOL, quad1d_batched
from .surface import ConformalSurface, DomainError, lambda_kappa_surface

__all__ = [
    "Point3", "Frame3", "KillingModel", "canonical_model", "metric_at", "frame_at",
    "bundle_curvature", "tau_gradient", "eta_field", "model_from_tau", "eck_preset",
    "gauge_shift", "gauge_map", "vertical_translate", "is_positive_definite",
    "pointwise_evaluator",
]

ETA_CHUNK = 2048


class Point3(NamedTuple):
    x: float
    y: float
    z: float


class Frame3(NamedTuple):
    E1: np.ndarray
    E2: np.ndarray
    E3: np.ndarray

    def matrix(self) -> np.ndarray:
        """Columns are the frame vectors in coordinates ``(d_x, d_y, d_z)``."""
        return np.column_stack([self.E1, self.E2, self.E3])


@dataclass(frozen=True)
class KillingModel:
    surface: ConformalSurface
    a: ScalarField
    b: ScalarField
    kind: str = "canonical"
    params: dict = field(default_factory=dict)

    @property
    def lam(self) -> ScalarField:
        return self.surface.lam

    def check_interior(self, x, y) -> None:
        self.surface.check_interior(x, y)


def canonical_model(surface: ConformalSurface, a: ScalarField | str,
                    b: ScalarField | str) -> KillingModel:
    a = ScalarField.from_expr(a) if isinstance(a, str) else a
    b = ScalarField.from_expr(b) if isinstance(b, str) else b
    return KillingModel(surface, a, b, kind="canonical")


def vertical_translate(p: Point3, t: float) -> Point3:
    """Flow of the unit Killing field ``d_z``."""
    return Point3(p[0], p[1], p[2] + t)


# ---------------------------------------------------------------------------
# Metric and frame

def metric_at(m: KillingModel, p) -> np.ndarray:
    """Coordinate matrix of the metric at ``p = (x, y, z)``; independent of ``z``."""
    x, y = float(p[0]), float(p[1])
    m.check_interior(x, y)
    lam, a, b = float(m.lam(x, y)), float(m.a(x, y)), float(m.b(x, y))
    l2 = lam * lam
    return np.array([
        [l2 + l2 * a * a, l2 * a * b, -lam * a],
        [l2 * a * b, l2 + l2 * b * b, -lam * b],
        [-lam * a, -lam * b, 1.0],
    ])


def is_positive_definite(g: np.ndarray) -> bool:
    """Leading principal minors all positive."""
    return all(np.linalg.det(g[:k, :k]) > 0 for k in range(1, g.shape[0] + 1))


def frame_at(m: KillingModel, p) -> Frame3:
    x, y = float(p[0]), float(p[1])
    m.check_interior(x, y)
    lam, a, b = float(m.lam(x, y)), float(m.a(x, y)), float(m.b(x, y))
    return Frame3(np.array([1.0 / lam, 0.0, a]),
                  np.array([0.0, 1.0 / lam, b]),
                  np.array([0.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# Bundle curvature

def bundle_curvature(m: KillingModel, p):
    """``tau = ((lambda b)_x - (lambda a)_y) / (2 lambda^2)``.

    ``p`` is ``(x, y)`` (a trailing ``z`` is ignored); arrays are accepted.
    """
    x, y = p[0], p[1]
    m.check_interior(x, y)
    return _tau_unchecked(m, x, y)


def _tau_unchecked(m: KillingModel, x, y):
    lam = m.lam(x, y)
    lx, ly = m.lam.grad(x, y)
    a, b = m.a(x, y), m.b(x, y)
    ay = m.a.d_dy(x, y)
    bx = m.b.d_dx(x, y)
    return (lx * b + lam * bx - ly * a - lam * ay) / (2.0 * lam * lam)


def tau_gradient(m: KillingModel, p):
    """Coordinate partials ``(tau_x, tau_y)`` of the bundle curvature.

    Second derivatives of ``lambda, a, b`` are exact for expression-backed
    fields and central differences of the exact gradients otherwise.
    """
    x, y = p[0], p[1]
    m.check_interior(x, y)
    lam = m.lam(x, y)
    lx, ly = m.lam.grad(x, y)
    lxx, lxy, lyy = m.lam.hessian(x, y)
    a, b = m.a(x, y), m.b(x, y)
    ax, ay = m.a.grad(x, y)
    bx, by = m.b.grad(x, y)
    _, axy, ayy = m.a.hessian(x, y)
    bxx, bxy, _ = m.b.hessian(x, y)
    num = lx * b + lam * bx - ly * a - lam * ay
    num_x = lxx * b + 2 * lx * bx + lam * bxx - lxy * a - ly * ax - lx * ay - lam * axy
    num_y = lxy * b + ly * bx + lx * by + lam * bxy - lyy * a - 2 * ly * ay - lam * ayy
    l2 = lam * lam
    return (num_x / (2 * l2) - num * lx / (l2 * lam),
            num_y / (2 * l2) - num * ly / (l2 * lam))


def pointwise_evaluator(m: KillingModel) -> Callable:
    """``(x, y) -> (lambda, lambda_x, lambda_y, a, b, tau)`` for inner loops.

    When ``lambda``, ``a`` and ``b`` are all expression-backed the six
    quantities come from a single compiled function; otherwise the fields are
    evaluated one by one.  No domain check is made.
    """
    lam, a, b = m.lam.expr, m.a.expr, m.b.expr
    if lam is None or a is None or b is None:
        def slow(x, y):
            lx, ly = m.lam.grad(x, y)
            return (m.lam(x, y), lx, ly, m.a(x, y), m.b(x, y),
                    _tau_unchecked(m, x, y))
        return slow
    raw = compile_exprs([lam, differentiate(lam, "x"), differentiate(lam, "y"), a, b,
                         differentiate(a, "y"), differentiate(b, "x")])

    def fast(x, y):
        l, lx, ly, av, bv, ay, bx = raw(x, y)
        return l, lx, ly, av, bv, (lx * bv + l * bx - ly * av - l * ay) / (2.0 * l * l)

    return fast


# ---------------------------------------------------------------------------
# Prescribed bundle curvature

def eta_field(s: ConformalSurface, tau: ScalarField,
              tol: float = DEFAULT_QUAD_TOL) -> ScalarField:
    """``eta(p) = 2 * integral_0^1 s tau(s p) lambda(s p)^2 ds`` as a field.

    Its partial derivatives are computed by differentiating under the
    integral sign (``eta_x(p) = 2 * integral s^2 F_x(s p) ds`` with
    ``F = tau lambda^2``, similarly for the Hessian), each integral by
    adaptive Simpson.  Scalar evaluations are memoised.
    """
    if not s.domain.star_shaped_about_origin:
        raise DomainError("eta needs a domain star-shaped about the origin")
    F = tau * s.lam * s.lam

    def integrate(X: np.ndarray, Y: np.ndarray, full: bool) -> np.ndarray:
        out = []
        for i in range(0, X.size, ETA_CHUNK):
            cx, cy = X[i:i + ETA_CHUNK, None], Y[i:i + ETA_CHUNK, None]

            def g(nodes, cx=cx, cy=cy):
                sx, sy = cx * nodes, cy * nodes
                w = 2.0 * nodes
                f = F(sx, sy)
                if not full:
                    return w * f
                fx, fy = F.grad(sx, sy)
                fxx, fxy, fyy = F.hessian(sx, sy)
                w2, w3 = w * nodes, w * nodes * nodes
                return np.stack(np.broadcast_arrays(w * f, w2 * fx, w2 * fy,
                                                    w3 * fxx, w3 * fxy, w3 * fyy))

            out.append(quad1d_batched(g, 0.0, 1.0, tol=tol))
        return np.concatenate(out, axis=-1)

    last_full: list = [None]

    @lru_cache(maxsize=1 << 16)
    def full_at(x: float, y: float) -> tuple:
        return tuple(integrate(np.array([x]), np.array([y]), True)[:, 0])

    def evaluate(x, y, k: int):
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            s.check_interior(x, y)
            return full_at(float(x), float(y))[k]
        X, Y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        s.check_interior(X, Y)
        key = (X.shape, X.tobytes(), Y.tobytes())
        if k == 0:
            hit = last_full[0]
            if hit is not None and hit[0] == key:
                return hit[1][0].reshape(X.shape)
            return integrate(X.ravel(), Y.ravel(), False).reshape(X.shape)
        hit = last_full[0]
        if hit is None or hit[0] != key:
            hit = (key, integrate(X.ravel(), Y.ravel(), True))
            last_full[0] = hit  # single reference swap; safe for concurrent readers
        return hit[1][k].reshape(X.shape)

    def value(x, y):
        return evaluate(x, y, 0)

    def dx(x, y):
        return evaluate(x, y, 1)

    def dy(x, y):
        return evaluate(x, y, 2)

    def hess(x, y):
        return evaluate(x, y, 3), evaluate(x, y, 4), evaluate(x, y, 5)

    return ScalarField(value, dx, dy, hess, label=f"eta[{tau.label}]")


def _surface_coordinate_fields():
    return ScalarField.coordinate("x"), ScalarField.coordinate("y")


def model_from_tau(s: ConformalSurface, tau: ScalarField | str,
                   tol: float = DEFAULT_QUAD_TOL) -> KillingModel:
    """Model over ``s`` whose bundle curvature is ``tau``.

    Matches ``dz - lambda (a dx + b dy)`` to ``dz + eta (y dx - x dy)``, i.e.
    ``a = -eta y / lambda`` and ``b = eta x / lambda``.
    """
    tau = ScalarField.from_expr(tau) if isinstance(tau, str) else tau
    eta = eta_field(s, tau, tol=tol)
    X, Y = _surface_coordinate_fields()
    a = -(eta * Y) / s.lam
    b = (eta * X) / s.lam
    return KillingModel(s, a, b, kind="from_tau", params={"tau": tau, "eta": eta})


def eck_preset(kappa: float, tau0: float) -> KillingModel:
    """The homogeneous space ``E(kappa, tau0)`` over ``lambda_kappa``.

    Here ``eta = tau0 * lambda_kappa`` in closed form, so
    ``a = -tau0 y`` and ``b = tau0 x``.
    """
    kappa, tau0 = float(kappa), float(tau0)
    s = lambda_kappa_surface(kappa)
    if tau0 == 0:
        a = b = ScalarField.constant(0.0)
    else:
        a = ScalarField.from_expr(BinOp("*", Num(-tau0), Var("y")))
        b = ScalarField.from_expr(BinOp("*", Num(tau0), Var("x")))
    eta = ScalarField.constant(tau0) * s.lam
    return KillingModel(s, a, b, kind="eck",
                        params={"kappa": kappa, "tau": tau0, "eta": eta})


# ---------------------------------------------------------------------------
# Gauge freedom

def gauge_shift(m: KillingModel, d: ScalarField | str) -> KillingModel:
    """Model with ``a1 = a + d_x / lambda`` and ``b1 = b + d_y / lambda``.

    Same ``lambda`` and the same bundle curvature; see :func:`gauge_map` for
    the explicit isometry between the two models.
    """
    d = ScalarField.from_expr(d) if isinstance(d, str) else d
    a1 = m.a + d.partial("x") / m.lam
    b1 = m.b + d.partial("y") / m.lam
    return KillingModel(m.surface, a1, b1, kind="canonical",
                        params={"gauge_of": m, "gauge": d})


def gauge_map(d: ScalarField | str) -> tuple[Callable, Callable]:
    """Isometry ``(x, y, z) -> (x, y, z + d(x, y))`` from ``m`` onto
    ``gauge_shift(m, d)`` and its differential.

    Returns ``(f, df)`` where ``df(p)`` is the 3x3 Jacobian at ``p``.
    """
    d = ScalarField.from_expr(d) if isinstance(d, str) else d

    def f(p):
        return Point3(p[0], p[1], p[2] + float(d(p[0], p[1])))

    def df(p):
        dx, dy = d.grad(p[0], p[1])
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [float(dx), float(dy), 1.0]])

    return f, df
