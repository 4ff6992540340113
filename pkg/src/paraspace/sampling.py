"""Point generation inside a region: uniform rejection sampling, Cartesian
grids over boxes, and coarse-to-fine refinement into a table.

Uniformity comes from rejection against the region's bounding box, so thin
regions get expensive; the sampler gives up once the observed acceptance rate
drops below MIN_ACCEPT_RATE after MAX_PROPOSALS proposals, which keeps a
10-dimensional 2-norm ball (acceptance ~0.0025) workable while near-empty
composites fail fast.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidValue, RegionTooThin, UnsupportedRegion
from .region import (
    And,
    Interval,
    RegionSpec,
    bounding_box,
    contains_batch,
    is_empty_box,
)
from .table import DataTable

MAX_PROPOSALS = 1_000_000
MIN_ACCEPT_RATE = 1e-4

Point = dict[str, float]


@dataclass
class SampleRequest:
    region: RegionSpec
    count: int = 1
    method: str = "uniform"  # uniform | grid | halton
    seed: int = 0
    levels: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.method in ("uniform", "halton") and self.count < 1:
            raise InvalidValue("count must be >= 1")
        for var, k in self.levels.items():
            if k < 1:
                raise InvalidValue(f"levels for {var!r} must be >= 1")


@dataclass
class SampleResult:
    points: list[Point]
    proposals: int
    accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 1.0


def sample(request: SampleRequest) -> list[Point]:
    if request.method == "uniform":
        return sample_uniform(request).points
    if request.method == "grid":
        return sample_grid(request)
    if request.method == "halton":
        return sample_halton(request).points
    raise InvalidValue(f"unknown sampling method {request.method!r}")


def sample_uniform(request: SampleRequest) -> SampleResult:
    """Exactly `count` i.i.d. uniform points in the region, by rejection."""
    box = bounding_box(request.region)
    if is_empty_box(box):
        raise RegionTooThin("region bounding box is empty")
    names = list(box)
    rng = np.random.default_rng(request.seed)
    lows = np.array([box[v][0] for v in names])
    highs = np.array([box[v][1] for v in names])

    points: list[Point] = []
    proposals = 0
    while len(points) < request.count:
        want = request.count - len(points)
        batch = min(max(4 * want, 1024), 262_144)
        pts = rng.uniform(lows, highs, size=(batch, len(names)))
        mask = contains_batch(request.region,
                              {v: pts[:, i] for i, v in enumerate(names)})
        hits = np.flatnonzero(mask)
        if len(hits) >= want:
            # only count proposals examined up to the last point we keep,
            # so the acceptance rate stays an unbiased volume estimator
            proposals += int(hits[want - 1]) + 1
            hits = hits[:want]
        else:
            proposals += batch
        for k in hits:
            points.append({v: float(pts[k, i]) for i, v in enumerate(names)})
        if proposals >= MAX_PROPOSALS and len(points) < request.count:
            rate = len(points) / proposals
            if rate < MIN_ACCEPT_RATE:
                raise RegionTooThin(
                    f"acceptance rate {rate:.2e} after {proposals} proposals; "
                    "the region is a vanishing fraction of its bounding box")
    return SampleResult(points, proposals, len(points))


def sample_grid(request: SampleRequest) -> list[Point]:
    """Cartesian product of equispaced per-variable level sets over a box.

    k levels on [lo, hi] include both endpoints for k >= 2; k = 1 places the
    midpoint.  The region's top level must be an interval box.
    """
    per_var = _box_intervals(request.region)
    axes = []
    for var, (lo, hi) in per_var.items():
        k = request.levels.get(var, 2)
        if k == 1:
            axes.append((var, [0.5 * (lo + hi)]))
        else:
            axes.append((var, list(np.linspace(lo, hi, k))))
    points = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        points.append({var: float(v) for (var, _), v in zip(axes, combo)})
    return points


def _box_intervals(region: RegionSpec) -> dict[str, tuple[float, float]]:
    if isinstance(region, Interval):
        return {region.var: (region.lo, region.hi)}
    if isinstance(region, And) and region.children and all(
            isinstance(c, Interval) for c in region.children):
        out: dict[str, tuple[float, float]] = {}
        for c in region.children:
            lo, hi = out.get(c.var, (-math.inf, math.inf))
            out[c.var] = (max(lo, c.lo), min(hi, c.hi))
        if any(lo > hi for lo, hi in out.values()):
            raise UnsupportedRegion("box conjunction is empty")
        return out
    raise UnsupportedRegion("grid sampling requires an interval-box region")


def sample_halton(request: SampleRequest) -> SampleResult:
    """Low-discrepancy variant: Halton points in the bounding box, rejected
    against the region.  Deterministic regardless of seed."""
    box = bounding_box(request.region)
    if is_empty_box(box):
        raise RegionTooThin("region bounding box is empty")
    names = list(box)
    bases = _primes(len(names))
    points: list[Point] = []
    index = 0
    proposals = 0
    while len(points) < request.count:
        index += 1
        proposals += 1
        point = {}
        for (var, base) in zip(names, bases):
            lo, hi = box[var]
            point[var] = lo + (hi - lo) * _radical_inverse(index, base)
        mask = contains_batch(request.region,
                              {v: np.asarray([point[v]]) for v in names})
        if mask[0]:
            points.append(point)
        if proposals >= MAX_PROPOSALS and len(points) / proposals < MIN_ACCEPT_RATE:
            raise RegionTooThin(f"acceptance rate too low after {proposals} proposals")
    return SampleResult(points, proposals, len(points))


def _radical_inverse(index: int, base: int) -> float:
    out, f = 0.0, 1.0 / base
    while index > 0:
        index, digit = divmod(index, base)
        out += digit * f
        f /= base
    return out


def _primes(n: int) -> list[int]:
    found: list[int] = []
    candidate = 2
    while len(found) < n:
        if all(candidate % p for p in found):
            found.append(candidate)
        candidate += 1
    return found


def refine(table: DataTable, subregion: RegionSpec, count: int, seed: int = 0,
           method: str = "uniform") -> list[int]:
    """Append `count` fresh uniform points in a subregion as pending rows."""
    if count < 1:
        raise InvalidValue("refine requires count >= 1")
    request = SampleRequest(subregion, count=count, method=method, seed=seed)
    return table.append_rows(sample(request))
