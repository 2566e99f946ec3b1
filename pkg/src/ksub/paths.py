"""Horizontal lifts, holonomy and geodesics of canonical models.

Geodesics other than the fibers are described by a slope ``mu`` (the
constant metric product ``<gamma', xi>``) and an unwrapped heading angle
``theta`` of the projected curve; the projection solves a first-order
system in ``(x, y, theta)`` and the geodesic is its horizontal lift pushed
up the fibers by ``mu t``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .exprfield import Expr, compile_expr, differentiate, parse_expr
from .model import KillingModel, Point3, bundle_curvature, pointwise_evaluator
from .numerics import (DEFAULT_STEP, DiskRegion, IntegrationError, quad_disk, rk4,
                       rk4_integral)
from .surface import DomainError

__all__ = [
    "PlaneCurve", "ClosedCurve2", "Path3", "GeodesicTrajectory", "GeodesicType",
    "circle", "curve_from_exprs", "horizontal_lift", "holonomy_signed", "holonomy_gap",
    "holonomy_report", "verify_holonomy", "geodesic_project", "geodesic", "geodesics",
    "vertical_geodesic", "classify_geodesic", "fd_velocity", "vertical_products",
    "base_geodesic_curvature", "write_csv", "CLOSURE_TOL",
]

CLOSURE_TOL = 1e-12
QUAD_NODES = 48


# ---------------------------------------------------------------------------
# Curves

@dataclass(frozen=True)
class PlaneCurve:
    """``t -> (x(t), y(t))`` on ``[t0, t1]``; callables accept arrays.

    ``velocity`` is optional; without it derivatives are central differences
    with step ``fd_step``.
    """

    position: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    t0: float
    t1: float
    velocity: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    label: str = ""

    def derivative(self, t, fd_step: float) -> tuple[np.ndarray, np.ndarray]:
        if self.velocity is not None:
            return self.velocity(t)
        xp, yp = self.position(t + fd_step)
        xm, ym = self.position(t - fd_step)
        return (np.asarray(xp) - xm) / (2 * fd_step), (np.asarray(yp) - ym) / (2 * fd_step)


@dataclass(frozen=True)
class ClosedCurve2:
    """A closed plane curve, optionally with the disk it bounds (circles)."""

    curve: PlaneCurve
    enclosed_region: DiskRegion | None = None

    def __post_init__(self):
        x0, y0 = self.curve.position(np.array([self.curve.t0]))
        x1, y1 = self.curve.position(np.array([self.curve.t1]))
        gap = math.hypot(float(x1[0] - x0[0]), float(y1[0] - y0[0]))
        if gap > CLOSURE_TOL:
            raise ValueError(f"curve is not closed: endpoints differ by {gap:g}")

    @property
    def length_parameter(self) -> float:
        return self.curve.t1 - self.curve.t0


def circle(center: Sequence[float], radius: float, clockwise: bool = False) -> ClosedCurve2:
    """Circle ``center + r (cos t, +-sin t)``, ``t in [0, 2 pi]``, with exact velocity."""
    cx, cy = float(center[0]), float(center[1])
    r = float(radius)
    sgn = -1.0 if clockwise else 1.0

    def pos(t):
        t = np.asarray(t, dtype=float)
        return cx + r * np.cos(t), cy + sgn * r * np.sin(t)

    def vel(t):
        t = np.asarray(t, dtype=float)
        return -r * np.sin(t), sgn * r * np.cos(t)

    curve = PlaneCurve(pos, 0.0, 2.0 * math.pi, vel, label=f"circle({cx}, {cy}, {r})")
    return ClosedCurve2(curve, DiskRegion((cx, cy), r))


def curve_from_exprs(x_of_t: str | Expr, y_of_t: str | Expr, t0: float, t1: float) -> PlaneCurve:
    """Curve given by expressions in ``t``; velocities are differentiated exactly."""
    ex = parse_expr(x_of_t, ("t",)) if isinstance(x_of_t, str) else x_of_t
    ey = parse_expr(y_of_t, ("t",)) if isinstance(y_of_t, str) else y_of_t
    fx, fy = compile_expr(ex, ("t",)), compile_expr(ey, ("t",))
    dx = compile_expr(differentiate(ex, "t"), ("t",))
    dy = compile_expr(differentiate(ey, "t"), ("t",))
    return PlaneCurve(lambda t: (fx(t), fy(t)), float(t0), float(t1),
                      lambda t: (dx(t), dy(t)), label=f"({x_of_t}, {y_of_t})")


# ---------------------------------------------------------------------------
# Paths and sampled-velocity helpers

@dataclass(frozen=True)
class Path3:
    """Samples ``points[i]`` of a curve in the total space at ``times[i]``.

    ``exit_time`` is set when integration stopped at the domain boundary
    before reaching the requested end; the samples then cover ``[t0,
    exit_time]``.
    """

    times: np.ndarray
    points: np.ndarray
    speed: float
    theta: np.ndarray | None = None
    exit_time: float | None = None

    def __post_init__(self):
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def samples(self) -> list[tuple[float, Point3]]:
        return [(float(t), Point3(*map(float, p))) for t, p in zip(self.times, self.points)]

    @property
    def complete(self) -> bool:
        return self.exit_time is None


def fd_velocity(times: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order central differences of uniformly sampled ``values``.

    Returns ``(t, v)`` at the interior samples ``2 .. n-3``; the final
    (possibly shortened) interval of the grid is excluded.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) > 2 and not math.isclose(t[-1] - t[-2], t[1] - t[0], rel_tol=1e-9):
        t, v = t[:-1], v[:-1]
    if len(t) < 5:
        raise ValueError("need at least 5 uniformly spaced samples")
    h = t[1] - t[0]
    d = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    return t[2:-2], d


def vertical_products(m: KillingModel, points: np.ndarray, velocities: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray]:
    """``(<v, xi>_g, <v, v>_g)`` for coordinate velocities at coordinate points."""
    x, y = points[:, 0], points[:, 1]
    lam = m.lam(x, y)
    a, b = m.a(x, y), m.b(x, y)
    vx, vy, vz = velocities[:, 0], velocities[:, 1], velocities[:, 2]
    vert = vz - lam * (a * vx + b * vy)
    return vert, lam * lam * (vx * vx + vy * vy) + vert * vert


def base_geodesic_curvature(m: KillingModel, times: np.ndarray, xy: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Geodesic curvature of a sampled unit-speed base curve, from positions only.

    The Euclidean heading of FD velocities is differentiated again by FD and
    corrected by the normal derivative of ``log lambda``.
    """
    t1, v = fd_velocity(times, xy)
    heading = np.unwrap(np.arctan2(v[:, 1], v[:, 0]))
    t2, dheading = fd_velocity(t1, heading[:, None])
    th = heading[2:-2]
    x, y = xy[:, 0], xy[:, 1]
    idx = np.searchsorted(times, t2)
    px, py = x[idx], y[idx]
    lam = m.lam(px, py)
    lx, ly = m.lam.grad(px, py)
    return t2, dheading[:, 0] + (lx * np.sin(th) - ly * np.cos(th)) / (lam * lam)


# ---------------------------------------------------------------------------
# Horizontal lifts and holonomy

def horizontal_lift(m: KillingModel, curve: PlaneCurve, z0: float = 0.0,
                    step: float = DEFAULT_STEP) -> Path3:
    """Horizontal lift of ``curve`` through height ``z0`` at ``curve.t0``.

    Integrates ``z' = lambda (a x' + b y')`` by RK4; curve derivatives are
    exact if the curve provides them, else central differences with step
    ``step / 10``.  Raises :class:`DomainError` if the curve leaves the domain.
    """
    fd = step / 10.0

    def rhs(t):
        x, y = curve.position(t)
        m.check_interior(x, y)
        xd, yd = curve.derivative(t, fd)
        return m.lam(x, y) * (m.a(x, y) * xd + m.b(x, y) * yd)

    traj = rk4_integral(rhs, float(z0), curve.t0, curve.t1, step)
    x, y = curve.position(traj.times)
    xd, yd = curve.derivative(traj.times, fd)
    pts = np.column_stack([x, y, traj.states[:, 0]])
    speed = float(np.max(m.lam(x, y) * np.hypot(xd, yd)))
    return Path3(traj.times, pts, speed, theta=np.unwrap(np.arctan2(yd, xd)))


def holonomy_signed(m: KillingModel, closed: ClosedCurve2, step: float = DEFAULT_STEP) -> float:
    """Signed ``z(end) - z(start)`` of the horizontal lift of a closed curve."""
    path = horizontal_lift(m, closed.curve, 0.0, step)
    return float(path.points[-1, 2] - path.points[0, 2])


def holonomy_gap(m: KillingModel, closed: ClosedCurve2, step: float = DEFAULT_STEP) -> float:
    """Length of the vertical segment joining the ends of the lift."""
    return abs(holonomy_signed(m, closed, step))


def _check_region(m: KillingModel, region: DiskRegion) -> None:
    th = np.linspace(0.0, 2.0 * math.pi, 257)
    cx, cy = region.center
    m.check_interior(cx + region.radius * np.cos(th), cy + region.radius * np.sin(th))
    m.check_interior(cx, cy)


def tau_integral(m: KillingModel, region: DiskRegion, n: int = QUAD_NODES) -> float:
    """``integral tau lambda^2 dx dy`` over ``region``."""
    _check_region(m, region)
    return quad_disk(lambda x, y: bundle_curvature(m, (x, y)) * m.lam(x, y) ** 2,
                     region, n, n)


def holonomy_report(m: KillingModel, closed: ClosedCurve2, step: float = DEFAULT_STEP,
                    n: int = QUAD_NODES) -> dict:
    """Both sides of the holonomy identity for a curve bounding a known disk."""
    if closed.enclosed_region is None:
        raise ValueError("curve has no enclosed region")
    _check_region(m, closed.enclosed_region)
    signed = holonomy_signed(m, closed, step)
    two_int = 2.0 * abs(tau_integral(m, closed.enclosed_region, n))
    return {"gap": abs(signed), "signed_gap": signed, "two_tau_integral": two_int,
            "residual": abs(abs(signed) - two_int)}


def verify_holonomy(m: KillingModel, closed: ClosedCurve2, step: float = DEFAULT_STEP,
                    n: int = QUAD_NODES) -> float:
    """``| gap - 2 |integral of tau| |`` over the disk bounded by ``closed``."""
    return holonomy_report(m, closed, step, n)["residual"]


# ---------------------------------------------------------------------------
# Geodesics

@dataclass(frozen=True)
class GeodesicTrajectory:
    """Projected geodesic: ``states[i] = (x, y, theta)`` at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    mu: float
    exit_time: float | None = None


@dataclass(frozen=True)
class GeodesicType:
    kind: str  # "vertical" | "horizontal" | "slanted"
    vertical_component: float

    @property
    def angle(self) -> float:
        """Angle between the geodesic and the fibers."""
        return math.acos(min(1.0, abs(self.vertical_component)))


def classify_geodesic(mu: float, is_vertical: bool = False) -> GeodesicType:
    """Vertical, horizontal (``mu = 0``) or slanted with unit vertical
    component ``mu / sqrt(1 + mu^2)``."""
    if is_vertical:
        return GeodesicType("vertical", 1.0)
    if mu == 0:
        return GeodesicType("horizontal", 0.0)
    return GeodesicType("slanted", mu / math.sqrt(1.0 + mu * mu))


def _geodesic_rhs(m: KillingModel, mu: np.ndarray) -> Callable:
    """Right-hand side for stacked states ``(x, y, theta, z_lift)``."""

    fields = pointwise_evaluator(m)

    def f(_t, s):
        x, y, th = s[0], s[1], s[2]
        m.check_interior(x, y)
        lam, lx, ly, a, b, tau = fields(x, y)
        c, sn = np.cos(th), np.sin(th)
        l2 = lam * lam
        return np.array([c / lam, sn / lam,
                         2.0 * mu * tau - (lx / l2) * sn + (ly / l2) * c,
                         a * c + b * sn])

    return f


def _integrate(m: KillingModel, x0, y0, theta0, mu, length: float, step: float):
    """Batched RK4; returns ``(times, states[t, 4, n], exit_time or None)``."""
    s0 = np.array([x0, y0, theta0, np.zeros_like(np.asarray(x0, float))], dtype=float)
    try:
        traj = rk4(_geodesic_rhs(m, np.asarray(mu, float)), s0, 0.0, float(length), step,
                   halt_on=(DomainError,))
        return traj.times, traj.states, None
    except IntegrationError as exc:
        return exc.trajectory.times, exc.trajectory.states, exc.last_time


def geodesic_project(m: KillingModel, p0: Sequence[float], theta0: float, mu: float,
                     length: float, step: float = DEFAULT_STEP) -> GeodesicTrajectory:
    """Unit-speed base curve with geodesic curvature ``2 mu tau``.

    Stops at the first step that would sample within the boundary margin;
    ``exit_time`` then records the last valid time.
    """
    m.check_interior(float(p0[0]), float(p0[1]))
    times, states, exit_time = _integrate(m, float(p0[0]), float(p0[1]), float(theta0),
                                          float(mu), length, step)
    return GeodesicTrajectory(times, states[:, :3], float(mu), exit_time)


def vertical_geodesic(start: Sequence[float], length: float, step: float = DEFAULT_STEP
                      ) -> Path3:
    """The fiber through ``start`` traversed at unit speed."""
    from .numerics import time_grid

    t = time_grid(0.0, float(length), step)
    pts = np.column_stack([np.full_like(t, float(start[0])), np.full_like(t, float(start[1])),
                           float(start[2]) + t])
    return Path3(t, pts, 1.0)


def _assemble(times, states, z0: float, mu: float, exit_time) -> Path3:
    pts = np.column_stack([states[:, 0], states[:, 1], z0 + states[:, 3] + mu * times])
    return Path3(times, pts, math.sqrt(1.0 + mu * mu), theta=states[:, 2].copy(),
                 exit_time=exit_time)


def geodesic(m: KillingModel, start: Sequence[float], theta0: float, mu: float,
             length: float, step: float = DEFAULT_STEP, vertical: bool = False) -> Path3:
    """Geodesic from ``start`` with base heading ``theta0`` and slope ``mu``.

    ``gamma(t) = (x(t), y(t), z0 + zh(t) + mu t)`` where ``(x, y)`` solves the
    projected system and ``zh`` is its horizontal lift.  It has constant
    ``<gamma', xi> = mu`` and ``|gamma'|^2 = 1 + mu^2``.  Fibers are
    requested with ``vertical=True``.
    """
    if vertical:
        m.check_interior(float(start[0]), float(start[1]))
        return vertical_geodesic(start, length, step)
    m.check_interior(float(start[0]), float(start[1]))
    times, states, exit_time = _integrate(m, float(start[0]), float(start[1]), float(theta0),
                                          float(mu), length, step)
    return _assemble(times, states, float(start[2]), float(mu), exit_time)


def geodesics(m: KillingModel, starts: Iterable[Sequence[float]], thetas: Iterable[float],
              mus: Iterable[float], length: float, step: float = DEFAULT_STEP) -> list[Path3]:
    """Several geodesics of one model integrated together.

    Identical to calling :func:`geodesic` for each; if any of them leaves the
    domain the batch is redone one by one so each gets its own exit time.
    """
    starts = np.asarray(list(starts), dtype=float).reshape(-1, 3)
    thetas = np.asarray(list(thetas), dtype=float)
    mus = np.asarray(list(mus), dtype=float)
    m.check_interior(starts[:, 0], starts[:, 1])
    times, states, exit_time = _integrate(m, starts[:, 0], starts[:, 1], thetas, mus,
                                          length, step)
    if exit_time is not None:
        return [geodesic(m, s, th, mu, length, step) for s, th, mu in zip(starts, thetas, mus)]
    return [_assemble(times, states[:, :, i], s[2], mu, None)
            for i, (s, mu) in enumerate(zip(starts, mus))]


# ---------------------------------------------------------------------------
# CSV

def write_csv(path: Path3, out: TextIO) -> None:
    """Rows ``t,x,y,z,theta`` with 17 significant digits."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "x", "y", "z", "theta"])
    theta = path.theta if path.theta is not None else np.full(len(path.times), math.nan)
    for t, (x, y, z), th in zip(path.times, path.points, theta):
        w.writerow([format(float(v), ".17g") for v in (t, x, y, z, th)])
