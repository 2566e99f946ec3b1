"""Property suites with fixed seeds, shared by ``ksub verify`` and the tests.

Every check returns a :class:`CheckResult` with the worst residual seen, the
tolerance it was held to and the wall time.  Each check compares two
independently computed quantities (closed form against finite differences,
quadrature against ODE integration, symbolic against numeric ...).
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import curvature as cv
from . import paths as pa
from . import sphere as sp
from .exprfield import BinOp, Call, Expr, Num, ScalarField, Var, compile_expr, differentiate
from .model import (KillingModel, bundle_curvature, canonical_model, eck_preset, frame_at,
                    gauge_map, gauge_shift, metric_at, model_from_tau)
from .numerics import DiskRegion, central_diff, quad_disk, rk4
from .surface import ConformalSurface, Plane, gaussian_curvature, lambda_kappa_surface

__all__ = ["CheckResult", "SUITES", "run_suite", "random_expression", "tau_x_model",
           "generic_model", "DEFAULT_SEED"]

DEFAULT_SEED = 20240611


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    seconds: float = 0.0
    seed: int | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _timed(name: str, tol: float, seed: int | None, body: Callable[[], tuple[float, dict]]
           ) -> CheckResult:
    t0 = time.perf_counter()
    residual, detail = body()
    elapsed = time.perf_counter() - t0
    return CheckResult(name, bool(residual <= tol), float(residual), tol, elapsed, seed, detail)


# ---------------------------------------------------------------------------
# Shared fixtures

def tau_x_model() -> KillingModel:
    """``lambda = 1, a = 0, b = x^2``: bundle curvature ``tau = x``."""
    return canonical_model(ConformalSurface(Plane(), ScalarField.constant(1.0)), "0", "x^2")


def generic_model() -> KillingModel:
    """Non-constant ``lambda``, ``a``, ``b`` and ``tau``."""
    s = ConformalSurface(Plane(), ScalarField.from_expr("1/(1 + 0.1*x^2 + 0.05*y^2)"))
    return canonical_model(s, "0.3*x*y", "x^2 + sin(y)")


def _unit_flat() -> ConformalSurface:
    return ConformalSurface(Plane(), ScalarField.constant(1.0))


def random_expression(rng: np.random.Generator, depth: int = 3) -> Expr:
    """Random expression in ``x, y`` that is finite on all of R^2."""
    if depth <= 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.4:
            return Var("x")
        if r < 0.8:
            return Var("y")
        return Num(round(float(rng.uniform(-2.0, 2.0)), 3))
    kind = int(rng.integers(0, 9))
    sub = lambda: random_expression(rng, depth - 1)  # noqa: E731
    if kind <= 3:
        return BinOp("+-*"[kind % 3], sub(), sub())
    if kind == 4:
        den = BinOp("+", Num(round(float(rng.uniform(1.0, 3.0)), 3)), BinOp("^", sub(), Num(2.0)))
        return BinOp("/", sub(), den)
    if kind == 5:
        return BinOp("^", sub(), Num(float(rng.integers(2, 4))))
    if kind == 6:
        return Call(str(rng.choice(["sin", "cos", "tanh"])), sub())
    if kind == 7:
        return Call("exp", Call("sin", sub()))
    inner = BinOp("+", Num(1.0), BinOp("^", sub(), Num(2.0)))
    return Call(str(rng.choice(["log", "sqrt"])), inner)


# ---------------------------------------------------------------------------
# Checks

def check_derivatives(seed: int = DEFAULT_SEED, n_expr: int = 100, n_points: int = 10,
                      tol: float = 1e-5) -> CheckResult:
    """Symbolic partials against central differences, relative error."""

    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_expr):
            e = random_expression(rng)
            f = compile_expr(e)
            scalar_f = lambda x, y, f=f: float(f(x, y))  # noqa: E731
            dfs = {v: compile_expr(differentiate(e, v)) for v in ("x", "y")}
            for _ in range(n_points):
                p = tuple(rng.uniform(-1.5, 1.5, 2))
                for v, df in dfs.items():
                    exact = float(df(*p))
                    approx = central_diff(scalar_f, p, v)
                    worst = max(worst, abs(exact - approx) / (1.0 + abs(approx)))
        return worst, {"expressions": n_expr, "points": n_points}

    return _timed("symbolic derivatives vs central differences", tol, seed, body)


def check_presets(tol: float = 1e-6) -> CheckResult:
    """Gaussian curvature of the ``lambda_kappa`` presets on 10x10 interior grids."""

    def body():
        worst = 0.0
        for kappa in (-1.0, -0.25, 0.0, 1.0, 4.0):
            s = lambda_kappa_surface(kappa)
            pts = np.array(s.interior_grid(10))
            K = gaussian_curvature(s, (pts[:, 0], pts[:, 1]))
            worst = max(worst, float(np.max(np.abs(K - kappa))))
        return worst, {"kappas": [-1.0, -0.25, 0.0, 1.0, 4.0]}

    return _timed("constant-curvature presets", tol, None, body)


def check_tau_round_trip(seed: int = DEFAULT_SEED, n_points: int = 50,
                         tol: float = 1e-6) -> CheckResult:
    """``bundle_curvature(model_from_tau(lambda, tau))`` against ``tau``."""

    def body():
        rng = np.random.default_rng(seed)
        taus = ["0", "0.5", "x", "x^2 - y", "sin(x)*cos(y)"]
        worst = 0.0
        for kappa in (0.0, -1.0, 1.0):
            s = lambda_kappa_surface(kappa)
            # Points well inside; for kappa = -1 the domain is the disk of radius 2.
            r = np.sqrt(rng.uniform(0.0, 1.0, n_points)) * 1.5
            th = rng.uniform(0.0, 2 * math.pi, n_points)
            X, Y = r * np.cos(th), r * np.sin(th)
            for t in taus:
                m = model_from_tau(s, t)
                want = ScalarField.from_expr(t)(X, Y)
                got = bundle_curvature(m, (X, Y))
                worst = max(worst, float(np.max(np.abs(got - want))))
        return worst, {"taus": taus, "kappas": [0.0, -1.0, 1.0]}

    return _timed("bundle curvature round trip", tol, seed, body)


def _random_polynomial(rng: np.random.Generator, degree: int = 2, scale: float = 1.0) -> str:
    terms = []
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            c = round(float(rng.uniform(-scale, scale)), 4)
            terms.append(f"({c!r})*x^{i}*y^{j}")
    return " + ".join(terms)


def check_gauge(seed: int = DEFAULT_SEED, n_d: int = 10, n_pairs: int = 20,
                tau_tol: float = 1e-8, metric_tol: float = 1e-9) -> CheckResult:
    """Gauge shifts keep ``tau`` and ``(x, y, z) -> (x, y, z + d)`` is an isometry."""

    def body():
        rng = np.random.default_rng(seed)
        bases = [generic_model(), eck_preset(-1.0, 0.4), tau_x_model()]
        worst_tau = worst_metric = 0.0
        for k in range(n_d):
            m0 = bases[k % len(bases)]
            d = _random_polynomial(rng, 3)
            m1 = gauge_shift(m0, d)
            f, df = gauge_map(d)
            for _ in range(n_pairs):
                r = rng.uniform(0.0, 1.2)
                th = rng.uniform(0.0, 2 * math.pi)
                p = (r * math.cos(th), r * math.sin(th), float(rng.uniform(-1, 1)))
                t0 = float(bundle_curvature(m0, p))
                t1 = float(bundle_curvature(m1, p))
                worst_tau = max(worst_tau, abs(t0 - t1))
                u, v = rng.normal(size=3), rng.normal(size=3)
                J = df(p)
                pulled = (J @ u) @ metric_at(m1, f(p)) @ (J @ v)
                direct = u @ metric_at(m0, p) @ v
                scale = max(1.0, abs(direct))
                worst_metric = max(worst_metric, abs(pulled - direct) / scale)
        # Normalise both residuals onto the stricter tolerance scale.
        residual = max(worst_tau * metric_tol / tau_tol, worst_metric)
        return residual, {"tau_residual": worst_tau, "metric_residual": worst_metric,
                          "tau_tol": tau_tol, "metric_tol": metric_tol}

    return _timed("gauge invariance", metric_tol, seed, body)


def check_frames(seed: int = DEFAULT_SEED, n: int = 20, tol: float = 1e-4) -> CheckResult:
    """Frame orthonormality, positive definiteness, and the connection table
    against FD Christoffel symbols projected onto the frame."""

    def body():
        rng = np.random.default_rng(seed)
        worst_orth = worst_conn = 0.0
        models = [eck_preset(0.0, 0.5), eck_preset(-1.0, 0.3), tau_x_model(), generic_model()]
        for i in range(n):
            m = models[i % len(models)]
            p = (*rng.uniform(-0.8, 0.8, 2), float(rng.uniform(-1, 1)))
            g = metric_at(m, p)
            if not np.all(np.linalg.eigvalsh(g) > 0):
                return math.inf, {"failure": f"metric not positive definite at {p}"}
            E = frame_at(m, p).matrix()
            worst_orth = max(worst_orth, float(np.max(np.abs(E.T @ g @ E - np.eye(3)))))
            diff = cv.connection_table(m, p) - cv.fd_connection_table(m, p)
            worst_conn = max(worst_conn, float(np.max(np.abs(diff))))
        return max(worst_orth, worst_conn), {"orthonormality": worst_orth,
                                             "connection": worst_conn}

    return _timed("frames and connection table", tol, seed, body)


def _random_unit_normal(m: KillingModel, p, rng: np.random.Generator) -> np.ndarray:
    g = metric_at(m, p)
    n = rng.normal(size=3)
    return n / math.sqrt(n @ g @ n)


def _plane_basis(m: KillingModel, p, normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two coordinate vectors spanning the g-orthogonal complement of ``normal``."""
    g = metric_at(m, p)
    covector = g @ normal
    # Null space of the covector in coordinates.
    _, _, vt = np.linalg.svd(covector[None, :])
    return vt[1], vt[2]


def check_sectional(seed: int = DEFAULT_SEED, n: int = 50, rel_tol: float = 1e-3,
                    exact_tol: float = 1e-12) -> CheckResult:
    """Closed-form sectional curvature against the generic FD Riemann oracle,
    and the exact horizontal / vertical values."""

    def body():
        rng = np.random.default_rng(seed)
        models = [eck_preset(0.0, 0.5), eck_preset(-1.0, 0.3), eck_preset(4.0, 1.0),
                  tau_x_model(), generic_model()]
        worst = 0.0
        worst_exact = 0.0
        for i in range(n):
            m = models[i % len(models)]
            p = (*rng.uniform(-0.8, 0.8, 2), float(rng.uniform(-1, 1)))
            nrm = _random_unit_normal(m, p, rng)
            u, v = _plane_basis(m, p, nrm)
            k_closed = cv.sectional(m, cv.make_plane(m, p, nrm))
            k_oracle = cv.fd_riemann_oracle(m, p, u, v)
            worst = max(worst, abs(k_closed - k_oracle) / (1.0 + abs(k_oracle)))
            km = float(gaussian_curvature(m.surface, p[:2]))
            tau = float(bundle_curvature(m, p))
            E = frame_at(m, p).matrix()
            horiz = cv.sectional(m, cv.make_plane(m, p, E[:, 2]))
            vert = cv.sectional(m, cv.make_plane(m, p, E[:, 0]))
            worst_exact = max(worst_exact, abs(horiz - (km - 3 * tau * tau)),
                              abs(vert - tau * tau))
        residual = max(worst * exact_tol / rel_tol, worst_exact)
        return residual, {"oracle_relative": worst, "exact": worst_exact,
                          "oracle_tol": rel_tol, "exact_tol": exact_tol}

    return _timed("sectional curvature vs FD oracle", exact_tol, seed, body)


def check_ricci(seed: int = DEFAULT_SEED, n: int = 10, tol: float = 1e-3) -> CheckResult:
    """Ricci curvature against the sum of oracle sectional curvatures, and the
    scalar curvature against the trace of Ricci."""

    def body():
        rng = np.random.default_rng(seed)
        models = [tau_x_model(), generic_model(), eck_preset(0.0, 0.5)]
        worst = worst_trace = 0.0
        for i in range(n):
            m = models[i % len(models)]
            p = (*rng.uniform(-0.8, 0.8, 2), 0.0)
            E = frame_at(m, p).matrix()
            q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
            v = E @ q[:, 0]
            oracle = sum(cv.fd_riemann_oracle(m, p, v, E @ q[:, j]) for j in (1, 2))
            worst = max(worst, abs(cv.ricci(m, p, v) - oracle) / (1.0 + abs(oracle)))
            trace = sum(cv.ricci(m, p, E[:, j]) for j in range(3))
            worst_trace = max(worst_trace, abs(trace - cv.scalar_curvature(m, p)))
        return max(worst, worst_trace * 1e3), {"oracle": worst, "trace": worst_trace}

    return _timed("Ricci vs oracle trace", tol, seed, body)


def check_classifier(tol: float = 1e-6) -> CheckResult:
    """Presets classify as E(kappa, tau); the tau = x model is rejected."""

    def body():
        worst = 0.0
        pairs = [(0.0, 0.5), (-1.0, 0.3), (4.0, 1.0), (1.0, 0.0), (-0.25, -2.0), (2.0, 0.7)]
        for kappa, tau in pairs:
            m = eck_preset(kappa, tau)
            res = cv.classify_homogeneous(m, m.surface.interior_grid(10), tol)
            if not isinstance(res, cv.ECK):
                return math.inf, {"failure": f"E({kappa}, {tau}) not recognised"}
            worst = max(worst, abs(res.kappa - kappa), abs(res.tau - tau))
        m = tau_x_model()
        res = cv.classify_homogeneous(m, m.surface.interior_grid(10), tol)
        if not (isinstance(res, cv.NotConstant) and res.tau_varies):
            return math.inf, {"failure": "tau = x model classified as homogeneous"}
        return worst, {"pairs": pairs, "rejection": res.report}

    return _timed("homogeneity classifier", tol, None, body)


def _circle_cases(rng: np.random.Generator, n: int) -> list[tuple[str, KillingModel, pa.ClosedCurve2]]:
    cases = [("E(0,0.5) r=1", eck_preset(0.0, 0.5), pa.circle((0.0, 0.0), 1.0))]
    flat = _unit_flat()
    while len(cases) < n:
        k = len(cases) % 4
        tau0 = round(float(rng.uniform(-1.0, 1.0)), 4)
        if k == 0:
            m, label, lim = eck_preset(0.0, tau0), f"E(0,{tau0})", 3.0
        elif k == 1:
            m, label, lim = eck_preset(-1.0, tau0), f"E(-1,{tau0})", 1.5
        elif k == 2:
            poly = _random_polynomial(rng, 2)
            m, label, lim = model_from_tau(flat, poly), f"from_tau({poly})", 2.0
        else:
            poly = _random_polynomial(rng, 2, 0.5)
            # Polynomial frame coefficients; tau is whatever they induce.
            m = canonical_model(flat, "0", f"2*({poly})*x")
            label, lim = f"canonical(b=2*({poly})*x)", 2.0
        radius = float(rng.uniform(0.2, 0.6 * lim))
        r_c = float(rng.uniform(0.0, lim - radius))
        th = float(rng.uniform(0.0, 2 * math.pi))
        curve = pa.circle((r_c * math.cos(th), r_c * math.sin(th)), radius,
                          clockwise=bool(rng.random() < 0.5))
        cases.append((label, m, curve))
    return cases


def check_holonomy(seed: int = DEFAULT_SEED, n: int = 20, step: float = 1e-4,
                   tol: float = 1e-4, pi_tol: float = 1e-5) -> CheckResult:
    """Holonomy gap of circle lifts against twice the enclosed bundle curvature."""

    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        rows = []
        pi_err = math.inf
        for label, m, curve in _circle_cases(rng, n):
            rep = pa.holonomy_report(m, curve, step)
            worst = max(worst, rep["residual"])
            rows.append({"model": label, **rep})
            if label == "E(0,0.5) r=1":
                pi_err = abs(rep["gap"] - math.pi)
        residual = max(worst, pi_err * tol / pi_tol)
        return residual, {"cases": len(rows), "pi_error": pi_err, "worst": worst}

    return _timed("holonomy identity", tol, seed, body)


def _geodesic_drift(m: KillingModel, path: pa.Path3, mu: float) -> tuple[float, float]:
    t, vel = pa.fd_velocity(path.times, path.points)
    idx = np.searchsorted(path.times, t)
    vert, norm2 = pa.vertical_products(m, path.points[idx], vel)
    return float(np.max(np.abs(vert - mu))), float(np.max(np.abs(norm2 - (1 + mu * mu))))


def check_geodesics(seed: int = DEFAULT_SEED, n: int = 30, length: float = 10.0,
                    step: float = 1e-3, tol: float = 1e-6) -> CheckResult:
    """``<gamma', xi> = mu`` and ``|gamma'|^2 = 1 + mu^2`` along integrated
    geodesics, with velocities from differences of the sampled positions."""

    def body():
        rng = np.random.default_rng(seed)
        models = [("E(0,0.5)", eck_preset(0.0, 0.5), 1.0), ("E(-1,0)", eck_preset(-1.0, 0.0), 0.5),
                  ("E(4,1)", eck_preset(4.0, 1.0), 1.0), ("tau=x", tau_x_model(), 0.5)]
        per = [n // len(models) + (1 if i < n % len(models) else 0) for i in range(len(models))]
        worst_v = worst_n = 0.0
        count = 0
        for (label, m, spread), k in zip(models, per):
            starts = [(*rng.uniform(-spread, spread, 2), float(rng.uniform(-1, 1)))
                      for _ in range(k)]
            thetas = rng.uniform(0.0, 2 * math.pi, k)
            mus = rng.uniform(-1.5, 1.5, k)
            for path, mu in zip(pa.geodesics(m, starts, thetas, mus, length, step), mus):
                if not path.complete:
                    return math.inf, {"failure": f"{label} geodesic left the domain"}
                dv, dn = _geodesic_drift(m, path, float(mu))
                worst_v, worst_n = max(worst_v, dv), max(worst_n, dn)
                count += 1
        return max(worst_v, worst_n), {"geodesics": count, "slope_drift": worst_v,
                                       "speed_drift": worst_n}

    return _timed("geodesic conservation", tol, seed, body)


def check_sphere(seed: int = DEFAULT_SEED) -> CheckResult:
    """Hopf fiber invariance, total bundle curvature of constants, the round
    Berger sphere, and the Riemannian-submersion length check."""

    def body():
        rng = np.random.default_rng(seed)
        tols = {"fiber": 1e-14, "total": 1e-5, "round": 1e-9, "submersion": 1e-5}
        res = dict.fromkeys(tols, 0.0)

        def s3():
            while True:
                q = rng.normal(size=4)
                q /= np.linalg.norm(q)
                if q[2] ** 2 + q[3] ** 2 > 1e-2:
                    return q

        for _ in range(100):
            p = s3()
            kappa = float(rng.uniform(0.5, 4.0))
            a = np.array(sp.hopf_projection(p, kappa))
            b = np.array(sp.hopf_projection(sp.fiber_rotation(p, float(rng.uniform(0, 7))), kappa))
            res["fiber"] = max(res["fiber"], float(np.max(np.abs(a - b))))
        for kappa, tau0 in ((1.0, 1.0), (4.0, 1.0), (0.5, -0.3), (2.0, 2.5)):
            T = sp.total_bundle_curvature(kappa, lambda u, v, t=tau0: np.full(np.shape(u), t))
            res["total"] = max(res["total"], abs(T - 4 * math.pi * tau0 / kappa))
        kappa, tau0 = 4.0, 1.0
        T = 4 * math.pi * tau0 / kappa
        eta = lambda u, v: tau0 * sp.chart_lambda(kappa, u, v)  # noqa: E731
        for _ in range(50):
            p = s3()
            F = sp.y_frame(kappa, T, eta, p)
            u, v = rng.normal(size=4), rng.normal(size=4)
            u -= (u @ p) * p
            v -= (v @ p) * p
            dev = abs(sp.s3_metric_at(F, u, v) - u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
            res["round"] = max(res["round"], float(dev))
        # Non-constant tau through the full construction.
        kappa = 1.0
        tau = ScalarField.from_expr("1 + 0.3*x/(1 + x^2 + y^2)")
        from .model import eta_field
        eta_f = eta_field(lambda_kappa_surface(kappa), tau)
        T = sp.total_bundle_curvature(kappa, tau)
        for _ in range(20):
            p = s3()
            F = sp.y_frame(kappa, T, eta_f, p)
            c = rng.normal(size=2)
            u = c[0] * F.vectors[0] + c[1] * F.vectors[1]
            norm_g = math.sqrt(sp.s3_metric_at(F, u, u))
            norm_base = float(np.linalg.norm(sp.hopf_differential(p, u, kappa)))
            res["submersion"] = max(res["submersion"], abs(norm_g - norm_base))
        ratio = max(res[k] / tols[k] for k in tols)
        return ratio, {**res, "tolerances": tols}

    return _timed("sphere suite (residual relative to tolerance)", 1.0, seed, body)


def check_numerics(tol: float = 1e-9) -> CheckResult:
    """RK4 on ``y' = y`` and polar quadrature of a polynomial against exact values."""

    def body():
        traj = rk4(lambda t, y: y, np.array([1.0]), 0.0, 1.0, 1e-3)
        e1 = abs(traj.final[0] - math.e)
        # integral of x^2 over the disk of radius 2 centred at (1, 0): pi r^4/4 + pi r^2
        q = quad_disk(lambda x, y: x * x, DiskRegion((1.0, 0.0), 2.0))
        e2 = abs(q - (math.pi * 16 / 4 + math.pi * 4)) / 20
        return max(e1, e2), {"rk4": e1, "quad_disk": e2}

    return _timed("numerical kernels", tol, None, body)


SUITES: dict[str, list[Callable[[], CheckResult]]] = {
    "expr": [check_derivatives],
    "numerics": [check_numerics],
    "surface": [check_presets],
    "frames": [check_frames, check_tau_round_trip, check_gauge],
    "curvature": [check_sectional, check_ricci, check_classifier],
    "holonomy": [check_holonomy],
    "geodesics": [check_geodesics],
    "sphere": [check_sphere],
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        return [c() for suite in SUITES.values() for c in suite]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    return [c() for c in SUITES[name]]
