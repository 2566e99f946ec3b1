"""JSON model descriptors.

A descriptor is an object with ``kind`` one of:

``eck``
    ``{"kind": "eck", "kappa": k, "tau": t}``
``canonical``
    ``{"kind": "canonical", "lambda": "...", "a": "...", "b": "..."}``
``from_tau``
    ``{"kind": "from_tau", "lambda": "...", "tau": "..."}``

and an optional ``domain``: ``{"disk": {"radius": r}}`` or
``{"rect": {"x0": .., "x1": .., "y0": .., "y1": ..}}`` (whole plane if absent).
"""

from __future__ import annotations

import json
import math
from typing import Any, Mapping

from .exprfield import ExprSyntaxError, ScalarField
from .model import KillingModel, canonical_model, eck_preset, model_from_tau
from .surface import ConformalSurface, Disk, Domain, Plane, Rect, lambda_kappa_surface

__all__ = ["DescriptorError", "load_descriptor", "model_from_descriptor", "parse_domain"]


class DescriptorError(ValueError):
    """Malformed descriptor: bad JSON, missing keys, unparsable expressions, ..."""


def _number(d: Mapping, key: str) -> float:
    if key not in d:
        raise DescriptorError(f"missing key {key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise DescriptorError(f"{key!r} must be a finite number")
    return float(v)


def _text(d: Mapping, key: str) -> str:
    if key not in d:
        raise DescriptorError(f"missing key {key!r}")
    v = d[key]
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return repr(float(v))
    if not isinstance(v, str):
        raise DescriptorError(f"{key!r} must be an expression string")
    return v


def _field(d: Mapping, key: str) -> ScalarField:
    text = _text(d, key)
    try:
        return ScalarField.from_expr(text)
    except ExprSyntaxError as exc:
        raise DescriptorError(f"{key!r}: {exc}") from exc


def parse_domain(value: Any) -> Domain:
    if value is None:
        return Plane()
    if not isinstance(value, Mapping) or len(value) != 1:
        raise DescriptorError("domain must be {'disk': {...}} or {'rect': {...}}")
    (kind, params), = value.items()
    if not isinstance(params, Mapping):
        raise DescriptorError(f"domain {kind!r} parameters must be an object")
    try:
        if kind == "disk":
            return Disk(_number(params, "radius"))
        if kind == "rect":
            return Rect(*(_number(params, k) for k in ("x0", "x1", "y0", "y1")))
    except ValueError as exc:
        raise DescriptorError(str(exc)) from exc
    raise DescriptorError(f"unknown domain kind {kind!r}")


def model_from_descriptor(desc: Any) -> KillingModel:
    if not isinstance(desc, Mapping):
        raise DescriptorError("descriptor must be a JSON object")
    kind = desc.get("kind")
    domain = parse_domain(desc.get("domain"))
    try:
        if kind == "eck":
            kappa, tau = _number(desc, "kappa"), _number(desc, "tau")
            m = eck_preset(kappa, tau)
            if "domain" in desc:
                s = lambda_kappa_surface(kappa)
                m = KillingModel(ConformalSurface(domain, s.lam, kappa=kappa), m.a, m.b,
                                 kind="eck", params=m.params)
            return m
        if kind == "canonical":
            s = ConformalSurface(domain, _field(desc, "lambda"))
            return canonical_model(s, _field(desc, "a"), _field(desc, "b"))
        if kind == "from_tau":
            if not domain.star_shaped_about_origin or isinstance(domain, Rect):
                raise DescriptorError("from_tau needs the plane or a disk centred at the origin")
            s = ConformalSurface(domain, _field(desc, "lambda"))
            return model_from_tau(s, _field(desc, "tau"))
    except DescriptorError:
        raise
    except ValueError as exc:
        raise DescriptorError(str(exc)) from exc
    raise DescriptorError(f"unknown model kind {kind!r}")


def load_descriptor(path: str) -> KillingModel:
    """Read a descriptor file (``-`` for stdin) and build the model."""
    import sys

    try:
        if path == "-":
            desc = json.load(sys.stdin)
        else:
            with open(path, encoding="utf-8") as fh:
                desc = json.load(fh)
    except OSError as exc:
        raise DescriptorError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DescriptorError(f"invalid JSON in {path}: {exc}") from exc
    return model_from_descriptor(desc)
