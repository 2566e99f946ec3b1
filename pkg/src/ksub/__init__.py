"""Computational toolkit for Killing submersions.

Canonical models ``lambda^2 (dx^2 + dy^2) + (dz - lambda (a dx + b dy))^2``
over planar domains, their curvature, horizontal lifts, holonomy and
geodesics, the homogeneous spaces ``E(kappa, tau)``, and the Hopf-fibration
models over round spheres.
"""

from .curvature import (ECK, NotConstant, PlaneSpec, classify_homogeneous, connection_table,
                        fd_riemann_oracle, make_plane, ricci, scalar_curvature, sectional)
from .exprfield import ScalarField, differentiate, parse_expr, to_text
from .model import (KillingModel, Point3, bundle_curvature, canonical_model, eck_preset,
                    eta_field, frame_at, gauge_map, gauge_shift, metric_at, model_from_tau,
                    vertical_translate)
from .paths import (circle, classify_geodesic, geodesic, geodesic_project, holonomy_gap,
                    horizontal_lift, verify_holonomy)
from .surface import ConformalSurface, Disk, DomainError, Plane, Rect, lambda_kappa_surface

__version__ = "0.1.0"

__all__ = [
    "ECK", "NotConstant", "PlaneSpec", "classify_homogeneous", "connection_table",
    "fd_riemann_oracle", "make_plane", "ricci", "scalar_curvature", "sectional",
    "ScalarField", "differentiate", "parse_expr", "to_text",
    "KillingModel", "Point3", "bundle_curvature", "canonical_model", "eck_preset",
    "eta_field", "frame_at", "gauge_map", "gauge_shift", "metric_at", "model_from_tau",
    "vertical_translate", "circle", "classify_geodesic", "geodesic", "geodesic_project",
    "holonomy_gap", "horizontal_lift", "verify_holonomy", "ConformalSurface", "Disk",
    "DomainError", "Plane", "Rect", "lambda_kappa_surface",
]
