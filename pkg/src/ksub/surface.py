"""Conformal surfaces ``(Omega, lambda^2 (dx^2 + dy^2))`` and the constant-curvature presets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exprfield import EvaluationError, ScalarField, parse_expr, fd_step

__all__ = [
    "Plane", "Disk", "Rect", "Domain", "DomainError", "ConformalSurface",
    "lambda_kappa_surface", "lambda_kappa_text", "gaussian_curvature", "domain_contains",
]

PROBE_N = 64
PLANE_PROBE_HALF_WIDTH = 10.0


class DomainError(ValueError):
    """A point lies outside the domain, or too close to its boundary to evaluate."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class Plane:
    """The whole plane."""

    def contains(self, x, y):
        return np.isfinite(x) & np.isfinite(y)

    def boundary_distance(self, x, y):
        return np.full(np.broadcast(x, y).shape, np.inf)[()]

    def probe_points(self, n: int = PROBE_N) -> tuple[np.ndarray, np.ndarray]:
        s = np.linspace(-PLANE_PROBE_HALF_WIDTH, PLANE_PROBE_HALF_WIDTH, n)
        X, Y = np.meshgrid(s, s)
        return X.ravel(), Y.ravel()

    def inner_box(self) -> tuple[float, float, float, float]:
        return (-1.0, 1.0, -1.0, 1.0)

    @property
    def star_shaped_about_origin(self) -> bool:
        return True

    def to_json(self):
        return None


@dataclass(frozen=True)
class Disk:
    """Open disk of ``radius`` centred at the origin."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"disk radius must be positive and finite, got {self.radius}")

    def contains(self, x, y):
        return np.hypot(x, y) < self.radius

    def boundary_distance(self, x, y):
        return self.radius - np.hypot(x, y)

    def probe_points(self, n: int = PROBE_N):
        s = np.linspace(-self.radius, self.radius, n + 2)[1:-1]
        X, Y = np.meshgrid(s, s)
        X, Y = X.ravel(), Y.ravel()
        margin = 2.0 * fd_step(X, Y)
        keep = self.boundary_distance(X, Y) > margin
        return X[keep], Y[keep]

    def inner_box(self):
        h = 0.5 * self.radius
        return (-h, h, -h, h)

    @property
    def star_shaped_about_origin(self) -> bool:
        return True

    def to_json(self):
        return {"disk": {"radius": self.radius}}


@dataclass(frozen=True)
class Rect:
    """Open rectangle ``(x0, x1) x (y0, y1)``."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, x, y):
        return (x > self.x0) & (x < self.x1) & (y > self.y0) & (y < self.y1)

    def boundary_distance(self, x, y):
        return np.minimum(np.minimum(x - self.x0, self.x1 - x),
                          np.minimum(y - self.y0, self.y1 - y))

    def probe_points(self, n: int = PROBE_N):
        xs = np.linspace(self.x0, self.x1, n + 2)[1:-1]
        ys = np.linspace(self.y0, self.y1, n + 2)[1:-1]
        X, Y = np.meshgrid(xs, ys)
        return X.ravel(), Y.ravel()

    def inner_box(self):
        cx, cy = 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)
        hx, hy = 0.4 * (self.x1 - self.x0), 0.4 * (self.y1 - self.y0)
        return (cx - hx, cx + hx, cy - hy, cy + hy)

    @property
    def star_shaped_about_origin(self) -> bool:
        # Convex, so star-shaped about any interior point.
        return bool(self.contains(0.0, 0.0))

    def to_json(self):
        return {"rect": {"x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1}}


Domain = Union[Plane, Disk, Rect]


class ConformalSurface:
    """A planar domain with the conformal metric ``lambda^2 (dx^2 + dy^2)``.

    The conformal factor must be positive and finite on a 64x64 probe grid of
    the domain, otherwise construction fails.
    """

    def __init__(self, domain: Domain, lam: ScalarField, *, kappa: float | None = None):
        self.domain = domain
        self.lam = lam
        self.kappa = kappa  # set for the lambda_kappa presets
        X, Y = domain.probe_points()
        try:
            vals = np.asarray(lam(X, Y), dtype=float)
        except EvaluationError as exc:
            raise ValueError(f"conformal factor undefined on the domain: {exc}") from exc
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            bad = np.flatnonzero(~(np.isfinite(vals) & (vals > 0)))[0]
            raise ValueError(f"conformal factor is not positive at ({X[bad]}, {Y[bad]})")

    def __repr__(self):
        return f"ConformalSurface({self.domain!r}, lambda={self.lam.label!r})"

    def contains(self, x, y):
        return self.domain.contains(x, y)

    def check_interior(self, x, y) -> None:
        """Raise :class:`DomainError` unless every point is at least two FD
        steps inside the domain."""
        if isinstance(self.domain, Plane):
            if np.isfinite(np.add(x, y)).all():
                return
        margin = 2.0 * fd_step(x, y)
        ok = self.domain.boundary_distance(x, y) >= margin
        if not np.all(ok):
            if np.ndim(ok) == 0:
                where = (float(x), float(y))
            else:
                i = np.flatnonzero(~np.broadcast_to(ok, np.broadcast(x, y).shape).ravel())[0]
                where = (float(np.broadcast_to(x, np.shape(ok)).ravel()[i]),
                         float(np.broadcast_to(y, np.shape(ok)).ravel()[i]))
            raise DomainError(f"point {where} is outside the domain or within the "
                              f"boundary margin", where)

    def interior_grid(self, n: int) -> list[tuple[float, float]]:
        """``n x n`` grid of interior points used by the homogeneity check."""
        x0, x1, y0, y1 = self.domain.inner_box()
        xs = np.linspace(x0, x1, n)
        ys = np.linspace(y0, y1, n)
        return [(float(x), float(y)) for y in ys for x in xs]


def lambda_kappa_text(kappa: float) -> str:
    return f"1/(1 + {kappa!r}/4*(x^2 + y^2))"


def lambda_kappa_surface(kappa: float) -> ConformalSurface:
    """``lambda_kappa = 1 / (1 + kappa (x^2 + y^2) / 4)`` on its maximal domain.

    The domain is the disk of radius ``2 / sqrt(-kappa)`` when ``kappa < 0``
    and the whole plane otherwise; the metric has Gaussian curvature ``kappa``.
    """
    kappa = float(kappa)
    domain: Domain = Disk(2.0 / math.sqrt(-kappa)) if kappa < 0 else Plane()
    if kappa == 0:
        lam = ScalarField.constant(1.0)
    else:
        lam = ScalarField.from_expr(parse_expr(lambda_kappa_text(kappa)),
                                    label=lambda_kappa_text(kappa))
    return ConformalSurface(domain, lam, kappa=kappa)


def domain_contains(s: ConformalSurface, p) -> bool:
    """Strict interior membership (no boundary margin)."""
    return bool(s.contains(float(p[0]), float(p[1])))


def gaussian_curvature(s: ConformalSurface, p):
    """``K = (lx^2 + ly^2)/l^4 - (lxx + lyy)/l^3``, i.e. ``-Laplacian(log l)/l^2``.

    ``p`` may be a pair of floats or a pair of arrays.
    """
    x, y = p
    s.check_interior(x, y)
    lam = s.lam(x, y)
    lx, ly = s.lam.grad(x, y)
    lxx, _, lyy = s.lam.hessian(x, y)
    return (lx * lx + ly * ly) / lam**4 - (lxx + lyy) / lam**3
