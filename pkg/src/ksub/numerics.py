"""Deterministic numerical kernels shared by every other module.

Fixed-step classical RK4, adaptive Simpson quadrature (scalar and batched),
tensor-product Gauss-Legendre quadrature on disks and annuli in polar
coordinates, and central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "OdeTrajectory", "DiskRegion", "IntegrationError", "QuadratureError",
    "rk4", "rk4_integral", "time_grid", "quad1d", "quad1d_batched",
    "quad_disk", "quad_annulus", "central_diff", "fd_derivative",
]

DEFAULT_STEP = 1e-3
DEFAULT_QUAD_TOL = 1e-10
FD_REL_STEP = 1e-5


@dataclass(frozen=True)
class OdeTrajectory:
    """Sampled ODE solution; ``states[i]`` is the state at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    step: float

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class DiskRegion:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "radius", float(self.radius))


class IntegrationError(RuntimeError):
    """ODE integration stopped early.

    ``last_time`` is the last time with a valid state and ``trajectory`` holds
    every valid sample up to it; ``cause`` is the triggering exception, if any.
    """

    def __init__(self, message: str, last_time: float, trajectory: OdeTrajectory,
                 cause: BaseException | None = None):
        super().__init__(message)
        self.last_time = last_time
        self.trajectory = trajectory
        self.cause = cause


class QuadratureError(RuntimeError):
    """Adaptive quadrature hit its depth limit; ``estimate`` is the best value found."""

    def __init__(self, message: str, estimate):
        super().__init__(message)
        self.estimate = estimate


# ---------------------------------------------------------------------------
# ODEs

def time_grid(t0: float, t1: float, step: float) -> np.ndarray:
    """Uniform grid from ``t0`` with spacing ``step``; the last interval is
    shortened so the grid ends exactly at ``t1``."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    n = math.ceil((t1 - t0) / step * (1.0 - 1e-12))
    times = t0 + step * np.arange(n + 1, dtype=float)
    times[-1] = t1
    return times


def rk4(f: Callable[[float, np.ndarray], np.ndarray], state0, t0: float, t1: float,
        step: float = DEFAULT_STEP,
        halt_on: tuple[type[BaseException], ...] = ()) -> OdeTrajectory:
    """Classical fourth-order Runge-Kutta with fixed ``step`` from ``t0`` to ``t1``.

    ``state0`` may have any shape (batches of independent systems are just a
    leading axis).  Exceptions listed in ``halt_on`` raised by ``f``, and any
    non-finite state, stop the integration with :class:`IntegrationError`
    carrying the valid part of the trajectory.
    """
    times = time_grid(t0, t1, step)
    y = np.array(state0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state is not finite")
    states = np.empty((len(times),) + y.shape)
    states[0] = y
    for i in range(len(times) - 1):
        t = times[i]
        h = times[i + 1] - t
        try:
            k1 = f(t, y)
            k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
            k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
            k4 = f(t + h, y + h * k3)
        except halt_on as exc:
            partial = OdeTrajectory(times[: i + 1].copy(), states[: i + 1].copy(), step)
            raise IntegrationError(f"integration halted at t={t!r}: {exc}", t, partial, exc) from exc
        y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y_next)):
            partial = OdeTrajectory(times[: i + 1].copy(), states[: i + 1].copy(), step)
            raise IntegrationError(f"non-finite state after t={t!r}", t, partial)
        y = y_next
        states[i + 1] = y
    return OdeTrajectory(times, states, step)


def rk4_integral(g: Callable[[np.ndarray], np.ndarray], z0: float, t0: float, t1: float,
                 step: float = DEFAULT_STEP) -> OdeTrajectory:
    """RK4 for ``z' = g(t)`` whose right-hand side does not depend on ``z``.

    The stages reduce to ``k2 = k3 = g(t + h/2)``, so ``g`` is evaluated on
    all grid points and midpoints in one vectorised call; the result is the
    same scheme as :func:`rk4` up to summation order.
    """
    times = time_grid(t0, t1, step)
    h = np.diff(times)
    mids = times[:-1] + 0.5 * h
    values = np.asarray(g(np.concatenate([times, mids])), dtype=float)
    g_nodes, g_mids = values[: len(times)], values[len(times):]
    if not (np.all(np.isfinite(g_nodes)) and np.all(np.isfinite(g_mids))):
        raise IntegrationError("non-finite right-hand side", t0,
                               OdeTrajectory(times[:1], np.array([[z0]]), step))
    increments = (h / 6.0) * (g_nodes[:-1] + 4.0 * g_mids + g_nodes[1:])
    z = np.empty(len(times))
    z[0] = z0
    z[1:] = z0 + np.cumsum(increments)
    return OdeTrajectory(times, z[:, None], step)


# ---------------------------------------------------------------------------
# Adaptive Simpson

def quad1d_batched(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                   tol: float = DEFAULT_QUAD_TOL, max_depth: int = 40,
                   min_depth: int = 2, full_output: bool = False):
    """Adaptive Simpson for a vector-valued integrand evaluated in batches.

    ``f`` maps a 1-D array of nodes of shape ``(m,)`` to values of shape
    ``(..., m)``.  All components share one interval tree; a panel is accepted
    when the largest component of the Richardson difference is below
    ``15 * tol_local``, where ``tol_local`` halves with each bisection.
    Panels are processed level by level so each level costs a single call.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")

    def F(nodes):
        v = np.asarray(f(nodes), dtype=float)
        if v.shape[-1:] != nodes.shape:
            v = np.broadcast_to(v, v.shape[:-1] + nodes.shape) if v.ndim else np.full(nodes.shape, float(v))
        return v

    ends = F(np.array([a, 0.5 * (a + b), b], dtype=float))
    out_shape = ends.shape[:-1]
    ends = ends.reshape(-1, 3)
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    fa, fm, fb = ends[:, :1], ends[:, 1:2], ends[:, 2:3]
    whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)
    total = np.zeros(ends.shape[0])
    err_total = 0.0
    tol_local = float(tol)
    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        vals = F(np.concatenate([lm, rm])).reshape(ends.shape[0], -1)
        n = len(lo)
        flm, frm = vals[:, :n], vals[:, n:]
        width = hi - lo
        left = width / 12.0 * (fa + 4.0 * flm + fm)
        right = width / 12.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        err = np.max(np.abs(delta), axis=0)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("non-finite integrand value", None)
        ok = err <= 15.0 * tol_local if depth >= min_depth else np.zeros(n, dtype=bool)
        refined = left + right + delta / 15.0
        total += refined[:, ok].sum(axis=1)
        err_total += float(np.sum(err[ok])) / 15.0
        if ok.all():
            result = total.reshape(out_shape)
            value = float(result) if result.ndim == 0 else result
            return (value, err_total) if full_output else value
        keep = ~ok
        if depth == max_depth:
            best = (total + refined[:, keep].sum(axis=1)).reshape(out_shape)
            raise QuadratureError(f"adaptive Simpson exceeded depth {max_depth}",
                                  float(best) if best.ndim == 0 else best)
        lo, hi = np.concatenate([lo[keep], mid[keep]]), np.concatenate([mid[keep], hi[keep]])
        fa, fm, fb = (np.concatenate([fa[:, keep], fm[:, keep]], axis=1),
                      np.concatenate([flm[:, keep], frm[:, keep]], axis=1),
                      np.concatenate([fm[:, keep], fb[:, keep]], axis=1))
        whole = np.concatenate([left[:, keep], right[:, keep]], axis=1)
        tol_local *= 0.5
    raise AssertionError("unreachable")


def quad1d(f: Callable[[float], float], a: float, b: float,
           tol: float = DEFAULT_QUAD_TOL, max_depth: int = 40,
           full_output: bool = False):
    """Adaptive Simpson integral of a scalar function ``f`` over ``[a, b]``.

    Returns the value, or ``(value, error_estimate)`` with ``full_output``.
    Raises :class:`QuadratureError` (carrying the best estimate) when the
    depth limit is exceeded.
    """

    def batched(nodes):
        return np.array([f(float(s)) for s in nodes], dtype=float)

    return quad1d_batched(batched, a, b, tol=tol, max_depth=max_depth,
                          full_output=full_output)


# ---------------------------------------------------------------------------
# Polar Gauss-Legendre

def _gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def quad_annulus(f: Callable, center: Sequence[float], r_inner: float, r_outer: float,
                 n_r: int = 32, n_theta: int = 32) -> float:
    """Integral of ``f(x, y)`` over an annulus, polar Gauss-Legendre with Jacobian ``r``."""
    if n_r < 8 or n_theta < 8:
        raise ValueError("need at least 8 nodes per direction")
    if not 0 <= r_inner < r_outer:
        raise ValueError(f"invalid radii [{r_inner}, {r_outer}]")
    r, wr = _gauss_legendre(n_r, r_inner, r_outer)
    th, wt = _gauss_legendre(n_theta, 0.0, 2.0 * math.pi)
    R, TH = np.meshgrid(r, th, indexing="ij")
    X = center[0] + R * np.cos(TH)
    Y = center[1] + R * np.sin(TH)
    vals = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    return float(np.einsum("i,ij,j->", wr * r, vals, wt))


def quad_disk(f: Callable, region: DiskRegion, n_r: int = 32, n_theta: int = 32) -> float:
    """Integral of ``f(x, y)`` over a disk by tensor-product Gauss-Legendre in
    polar coordinates.  ``f`` must accept NumPy arrays."""
    return quad_annulus(f, region.center, 0.0, region.radius, n_r, n_theta)


# ---------------------------------------------------------------------------
# Finite differences

def default_fd_step(p: Sequence[float]) -> float:
    return FD_REL_STEP * (1.0 + math.hypot(*p))


def central_diff(f: Callable[[float, float], float], p: Sequence[float], var: str,
                 h: float | None = None) -> float:
    """``(f(p + h e) - f(p - h e)) / 2h`` along ``var`` in ``{"x", "y"}``."""
    x, y = float(p[0]), float(p[1])
    if h is None:
        h = default_fd_step((x, y))
    if not h > 0:
        raise ValueError("h must be positive")
    if var == "x":
        fp, fm = f(x + h, y), f(x - h, y)
    elif var == "y":
        fp, fm = f(x, y + h), f(x, y - h)
    else:
        raise ValueError(f"var must be 'x' or 'y', got {var!r}")
    if not (math.isfinite(fp) and math.isfinite(fm)):
        raise ArithmeticError(f"non-finite sample in central difference at {p}")
    return (fp - fm) / (2.0 * h)


def fd_derivative(f: Callable[[np.ndarray], np.ndarray], p: np.ndarray, h: float) -> np.ndarray:
    """Jacobian-style central differences of a vector function of a vector.

    Returns ``D`` with ``D[i] = (f(p + h e_i) - f(p - h e_i)) / 2h``.
    """
    p = np.asarray(p, dtype=float)
    out = []
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        out.append((np.asarray(f(p + e)) - np.asarray(f(p - e))) / (2.0 * h))
    return np.array(out)
