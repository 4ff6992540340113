"""Regions of interest as composable predicates over data-space variables.

A region is a tree of interval boxes, p-norm balls around a point, and
boolean combinators.  Regions are always expressed in data units; screen
rectangles are converted here, once, by the view that produced them.
Values on the boundary are inside (all comparisons are <=), so a cursor is
just a degenerate interval.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import ParseError, UnboundedRegion, UnknownVariable, UnsupportedAnalytic


@dataclass(frozen=True)
class Interval:
    var: str
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval bounds must be finite")
        if self.lo > self.hi:
            raise ValueError(f"interval for {self.var!r} has lo > hi")


@dataclass(frozen=True)
class Ball:
    """Points u with ||W (u - center)||_p <= radius, W = diag(weights).

    With p = inf and unit weights this is an axis-aligned box; lowering p
    shrinks the enclosed volume without moving the center.
    """

    vars: tuple[str, ...]
    center: tuple[float, ...]
    radius: float
    p: float = 2.0
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.vars:
            raise ValueError("ball needs at least one variable")
        if len(self.center) != len(self.vars):
            raise ValueError("center length must match vars")
        if not all(math.isfinite(c) for c in self.center):
            raise ValueError("ball center must be finite")
        if self.weights is not None:
            if len(self.weights) != len(self.vars):
                raise ValueError("weights length must match vars")
            if not all(w >= 0 and math.isfinite(w) for w in self.weights):
                raise ValueError("ball weights must be finite and >= 0")
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError("radius must be finite and >= 0")
        if not (self.p >= 1):
            raise ValueError("p must be >= 1 (or inf)")


@dataclass(frozen=True)
class And:
    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Or:
    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("Or requires at least one child")


@dataclass(frozen=True)
class Not:
    child: "RegionSpec"


@dataclass(frozen=True)
class All:
    pass


RegionSpec = Interval | Ball | And | Or | Not | All


@dataclass(frozen=True)
class Cursor:
    """Region shrunk to a single point; anchors detail views and neighborhoods."""

    coords: Mapping[str, float]

    def __post_init__(self):
        coords = dict(self.coords)
        for name, v in coords.items():
            if not math.isfinite(v):
                raise ValueError(f"cursor coordinate {name!r} is not finite")
        object.__setattr__(self, "coords", coords)

    def region(self) -> RegionSpec:
        return And(tuple(Interval(n, v, v) for n, v in self.coords.items()))

    def ball(self, radius: float, p: float = 2.0,
             weights: tuple[float, ...] | None = None) -> Ball:
        names = tuple(self.coords)
        return Ball(names, tuple(self.coords[n] for n in names), radius, p, weights)


def referenced_vars(region: RegionSpec) -> set[str]:
    if isinstance(region, Interval):
        return {region.var}
    if isinstance(region, Ball):
        return set(region.vars)
    if isinstance(region, (And, Or)):
        out: set[str] = set()
        for c in region.children:
            out |= referenced_vars(c)
        return out
    if isinstance(region, Not):
        return referenced_vars(region.child)
    return set()


def contains(region: RegionSpec, point: Mapping[str, float]) -> bool:
    """Inclusive membership test; missing referenced variables raise."""
    arrays = {k: np.asarray([v], dtype=float) for k, v in point.items()}
    return bool(contains_batch(region, arrays)[0])


def contains_batch(region: RegionSpec, columns: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorized membership over parallel column arrays."""
    if isinstance(region, Interval):
        x = _column(columns, region.var)
        return (region.lo <= x) & (x <= region.hi)
    if isinstance(region, Ball):
        deltas = [_column(columns, v) - c for v, c in zip(region.vars, region.center)]
        if region.weights is not None:
            deltas = [d * w for d, w in zip(deltas, region.weights)]
        stacked = np.abs(np.stack(deltas))
        if math.isinf(region.p):
            dist = stacked.max(axis=0)
        else:
            dist = (stacked ** region.p).sum(axis=0) ** (1.0 / region.p)
        return dist <= region.radius
    if isinstance(region, And):
        out = None
        for child in region.children:
            mask = contains_batch(child, columns)
            out = mask if out is None else out & mask
        if out is None:
            n = len(next(iter(columns.values()))) if columns else 1
            return np.ones(n, dtype=bool)
        return out
    if isinstance(region, Or):
        out = None
        for child in region.children:
            mask = contains_batch(child, columns)
            out = mask if out is None else out | mask
        return out
    if isinstance(region, Not):
        return ~contains_batch(region.child, columns)
    if isinstance(region, All):
        n = len(next(iter(columns.values()))) if columns else 1
        return np.ones(n, dtype=bool)
    raise TypeError(f"not a region: {region!r}")


def _column(columns: Mapping[str, np.ndarray], name: str) -> np.ndarray:
    try:
        return columns[name]
    except KeyError:
        raise UnknownVariable(f"region references unknown variable {name!r}") from None


# --- bounding boxes ---------------------------------------------------------

_UNBOUNDED = (-math.inf, math.inf)


def bounding_box(region: RegionSpec) -> dict[str, tuple[float, float]]:
    """Smallest axis-aligned box containing the region, per referenced variable.

    Raises UnboundedRegion when any referenced variable has no finite bounds
    (All, top-level Not, or an Or whose branches free a variable).
    """
    box = _box(region)
    if not all(math.isfinite(lo) and math.isfinite(hi) for lo, hi in box.values()):
        raise UnboundedRegion("region has no finite bounding box")
    if isinstance(region, All) or not box:
        raise UnboundedRegion("region has no finite bounding box")
    return box


def _box(region: RegionSpec) -> dict[str, tuple[float, float]]:
    if isinstance(region, Interval):
        return {region.var: (region.lo, region.hi)}
    if isinstance(region, Ball):
        out = {}
        ws = region.weights or (1.0,) * len(region.vars)
        for v, c, w in zip(region.vars, region.center, ws):
            extent = math.inf if w == 0 else region.radius / w
            out[v] = (c - extent, c + extent)
        return out
    if isinstance(region, And):
        out: dict[str, tuple[float, float]] = {}
        for child in region.children:
            for v, (lo, hi) in _box(child).items():
                plo, phi = out.get(v, _UNBOUNDED)
                out[v] = (max(plo, lo), min(phi, hi))
        return out
    if isinstance(region, Or):
        boxes = [_box(c) for c in region.children]
        out = {}
        for v in referenced_vars(region):
            lo, hi = math.inf, -math.inf
            for b in boxes:
                clo, chi = b.get(v, _UNBOUNDED)
                lo, hi = min(lo, clo), max(hi, chi)
            out[v] = (lo, hi)
        return out
    if isinstance(region, Not):
        # Negation frees its variables; a bounded And sibling must re-bound them.
        return {v: _UNBOUNDED for v in referenced_vars(region)}
    if isinstance(region, All):
        return {}
    raise TypeError(f"not a region: {region!r}")


def box_volume(box: Mapping[str, tuple[float, float]]) -> float:
    vol = 1.0
    for lo, hi in box.values():
        vol *= hi - lo
    return vol


def is_empty_box(box: Mapping[str, tuple[float, float]]) -> bool:
    return any(lo > hi for lo, hi in box.values())


# --- volume -----------------------------------------------------------------

@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float | None = None


def ball_volume(n: int, radius: float, p: float) -> float:
    """Volume of the n-dimensional p-norm ball: 2^n r^n Gamma(1+1/p)^n / Gamma(1+n/p)."""
    if math.isinf(p):
        return (2.0 * radius) ** n
    return (2.0 * radius) ** n * math.gamma(1.0 + 1.0 / p) ** n / math.gamma(1.0 + n / p)


def volume(region: RegionSpec, mode: str = "analytic", samples: int = 100_000,
           seed: int = 0) -> VolumeEstimate:
    """Region volume, exact for boxes and balls or Monte-Carlo for anything bounded.

    Monte-Carlo draws uniform proposals in the bounding box and returns the
    accepted fraction scaled by the box volume, with the binomial standard
    error of that estimate.
    """
    if mode == "analytic":
        return VolumeEstimate(_analytic_volume(region))
    if mode != "monte_carlo":
        raise ValueError(f"unknown volume mode {mode!r}")
    box = bounding_box(region)
    if is_empty_box(box):
        return VolumeEstimate(0.0, 0.0)
    names = list(box)
    rng = np.random.default_rng(seed)
    lows = np.array([box[v][0] for v in names])
    highs = np.array([box[v][1] for v in names])
    pts = rng.uniform(lows, highs, size=(samples, len(names)))
    mask = contains_batch(region, {v: pts[:, i] for i, v in enumerate(names)})
    frac = mask.mean()
    vol = box_volume(box)
    stderr = vol * math.sqrt(frac * (1.0 - frac) / samples)
    return VolumeEstimate(frac * vol, stderr)


def _analytic_volume(region: RegionSpec) -> float:
    if isinstance(region, Interval):
        return region.hi - region.lo
    if isinstance(region, Ball):
        vol = ball_volume(len(region.vars), region.radius, region.p)
        for w in region.weights or ():
            if w == 0:
                raise UnsupportedAnalytic("ball with zero weight is unbounded")
            vol /= w
        return vol
    if isinstance(region, And):
        per_var: dict[str, tuple[float, float]] = {}
        for child in region.children:
            if not isinstance(child, Interval):
                raise UnsupportedAnalytic(
                    "analytic volume requires a box of intervals or a single ball")
            lo, hi = per_var.get(child.var, _UNBOUNDED)
            per_var[child.var] = (max(lo, child.lo), min(hi, child.hi))
        if not per_var:
            raise UnsupportedAnalytic("empty conjunction has no volume")
        vol = 1.0
        for lo, hi in per_var.values():
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise UnsupportedAnalytic("unbounded conjunction")
            vol *= max(hi - lo, 0.0)
        return vol
    raise UnsupportedAnalytic(f"no closed form for {type(region).__name__}")


# --- screen rectangles ------------------------------------------------------

@dataclass(frozen=True)
class ViewTransform:
    """Affine screen-to-data map for one scatter cell (y flip folds into scale)."""

    x_var: str
    y_var: str
    x_scale: float = 1.0
    x_offset: float = 0.0
    y_scale: float = 1.0
    y_offset: float = 0.0

    def to_data(self, sx: float, sy: float) -> tuple[float, float]:
        return (self.x_offset + self.x_scale * sx, self.y_offset + self.y_scale * sy)


def from_rectangle(view: ViewTransform,
                   rect: tuple[float, float, float, float]) -> RegionSpec:
    """Screen rectangle (sx0, sy0, sx1, sy1) to a data-unit interval pair.

    A zero-area rectangle collapses to point intervals, i.e. a cursor.
    """
    x0, y0 = view.to_data(rect[0], rect[1])
    x1, y1 = view.to_data(rect[2], rect[3])
    return And((
        Interval(view.x_var, min(x0, x1), max(x0, x1)),
        Interval(view.y_var, min(y0, y1), max(y0, y1)),
    ))


# --- serialization ----------------------------------------------------------
#
# JSON documents, extension .region.json; numbers are IEEE-754 doubles and
# p = infinity travels as the string "inf".

def to_document(region: RegionSpec) -> dict:
    if isinstance(region, Interval):
        return {"type": "interval", "var": region.var, "lo": region.lo, "hi": region.hi}
    if isinstance(region, Ball):
        doc = {
            "type": "ball",
            "vars": list(region.vars),
            "center": list(region.center),
            "radius": region.radius,
            "p": "inf" if math.isinf(region.p) else region.p,
        }
        if region.weights is not None:
            doc["weights"] = list(region.weights)
        return doc
    if isinstance(region, And):
        return {"type": "and", "children": [to_document(c) for c in region.children]}
    if isinstance(region, Or):
        return {"type": "or", "children": [to_document(c) for c in region.children]}
    if isinstance(region, Not):
        return {"type": "not", "child": to_document(region.child)}
    if isinstance(region, All):
        return {"type": "all"}
    raise TypeError(f"not a region: {region!r}")


def from_document(doc) -> RegionSpec:
    """Parse a region document; variable names bind later, against a table."""
    if not isinstance(doc, dict):
        raise ParseError(f"region document must be an object, got {type(doc).__name__}")
    kind = doc.get("type")
    try:
        if kind == "interval":
            return Interval(_str(doc, "var"), _num(doc, "lo"), _num(doc, "hi"))
        if kind == "ball":
            vars_ = doc.get("vars")
            center = doc.get("center")
            if not isinstance(vars_, list) or not all(isinstance(v, str) for v in vars_):
                raise ParseError("ball vars must be a list of names")
            if not isinstance(center, list):
                raise ParseError("ball center must be a list of numbers")
            p = doc.get("p", 2.0)
            if p == "inf":
                p = math.inf
            if not isinstance(p, (int, float)):
                raise ParseError("ball p must be a number or 'inf'")
            weights = doc.get("weights")
            if weights is not None and not isinstance(weights, list):
                raise ParseError("ball weights must be a list")
            return Ball(tuple(vars_), tuple(float(c) for c in center),
                        _num(doc, "radius"), float(p),
                        tuple(float(w) for w in weights) if weights is not None else None)
        if kind == "and":
            children = tuple(from_document(c) for c in _children(doc))
            return All() if not children else And(children)
        if kind == "or":
            return Or(tuple(from_document(c) for c in _children(doc)))
        if kind == "not":
            if "child" not in doc:
                raise ParseError("not requires a child")
            return Not(from_document(doc["child"]))
        if kind == "all":
            return All()
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc)) from exc
    raise ParseError(f"unknown region type {kind!r}")


def _children(doc) -> list:
    children = doc.get("children")
    if not isinstance(children, list):
        raise ParseError(f"{doc.get('type')} requires a children list")
    return children


def _num(doc, key) -> float:
    v = doc.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ParseError(f"field {key!r} must be a number")
    return float(v)


def _str(doc, key) -> str:
    v = doc.get(key)
    if not isinstance(v, str):
        raise ParseError(f"field {key!r} must be a string")
    return v


def save_region(region: RegionSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_document(region), fh, indent=2)
        fh.write("\n")


def load_region(path) -> RegionSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid region JSON: {exc}") from exc
    return from_document(doc)


def unresolved_names(region: RegionSpec, known: Iterable[str]) -> set[str]:
    """Names a loaded document references that the current table lacks."""
    return referenced_vars(region) - set(known)
