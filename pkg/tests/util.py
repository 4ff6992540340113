"""Shared test helpers: random region trees and little independent oracles."""

from __future__ import annotations

import math

import numpy as np

from paraspace.region import All, And, Ball, Interval, Not, Or

P_CHOICES = (1.0, 1.5, 2.0, 4.0, math.inf)


def random_interval(rng, names):
    var = names[rng.integers(len(names))]
    a, b = sorted(rng.uniform(-2.0, 2.0, size=2))
    return Interval(var, float(a), float(b))


def random_ball(rng, names):
    k = int(rng.integers(1, len(names) + 1))
    chosen = tuple(np.random.default_rng(rng.integers(1 << 30)).permutation(names)[:k])
    center = tuple(float(c) for c in rng.uniform(-1.5, 1.5, size=k))
    weights = None
    if rng.random() < 0.3:
        weights = tuple(float(w) for w in rng.uniform(0.5, 2.0, size=k))
    return Ball(chosen, center, float(rng.uniform(0.1, 1.5)),
                float(P_CHOICES[rng.integers(len(P_CHOICES))]), weights)


def random_region(rng, names, depth=3, allow_not=True, allow_all=True):
    """Random predicate tree over the given variable names."""
    roll = rng.random()
    if depth == 0 or roll < 0.45:
        return random_interval(rng, names) if rng.random() < 0.6 \
            else random_ball(rng, names)
    if roll < 0.65:
        kids = tuple(random_region(rng, names, depth - 1, allow_not, allow_all)
                     for _ in range(int(rng.integers(1, 4))))
        return And(kids)
    if roll < 0.85:
        kids = tuple(random_region(rng, names, depth - 1, allow_not, allow_all)
                     for _ in range(int(rng.integers(1, 4))))
        return Or(kids)
    if allow_not and roll < 0.95:
        return Not(random_region(rng, names, depth - 1, allow_not, allow_all))
    if allow_all:
        return All()
    return random_interval(rng, names)


def oracle_contains(region, point) -> bool:
    """Direct predicate evaluation, written independently of region.contains."""
    if isinstance(region, Interval):
        v = point[region.var]
        return region.lo <= v <= region.hi
    if isinstance(region, Ball):
        ws = region.weights or tuple(1.0 for _ in region.vars)
        deltas = [abs((point[v] - c) * w)
                  for v, c, w in zip(region.vars, region.center, ws)]
        if math.isinf(region.p):
            dist = max(deltas)
        else:
            dist = sum(d ** region.p for d in deltas) ** (1.0 / region.p)
        return dist <= region.radius
    if isinstance(region, And):
        return all(oracle_contains(c, point) for c in region.children)
    if isinstance(region, Or):
        return any(oracle_contains(c, point) for c in region.children)
    if isinstance(region, Not):
        return not oracle_contains(region.child, point)
    if isinstance(region, All):
        return True
    raise TypeError(region)


def jacobi_eigh(A, sweeps=100, tol=1e-12):
    """Plain Jacobi rotation eigensolver for small symmetric matrices; an
    independent check on the LAPACK path."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(A[p, q]))
                if abs(A[p, q]) < tol:
                    continue
                theta = 0.5 * math.atan2(2.0 * A[p, q], A[q, q] - A[p, p])
                c, s = math.cos(theta), math.sin(theta)
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
        if off < tol:
            break
    eigenvalues = np.diagonal(A).copy()
    order = np.argsort(eigenvalues)[::-1]
    return eigenvalues[order], V[:, order]
