"""Pareto-front quality indicators: dominance, IGD, 2-D hypervolume.

All fronts use the maximize-both convention: the second objective (total
flight energy) is negated before entering any front.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyFrontError,
    PointBelowReferenceError,
)


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """Weak Pareto dominance: a >= b componentwise and a != b (maximize)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes differ: {a.shape} vs {b.shape}")
    return bool(np.all(a >= b) and np.any(a > b))


def pareto_filter(points: np.ndarray) -> np.ndarray:
    """Boolean mask of the non-dominated points (duplicates all kept)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise DimensionMismatchError("points must be a 2-D array")
    n = pts.shape[0]
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        if not mask[i]:
            continue
        ge = np.all(pts >= pts[i], axis=1)
        gt = np.any(pts > pts[i], axis=1)
        if np.any(ge & gt):
            mask[i] = False
    return mask


def igd(front: np.ndarray, reference_front: np.ndarray) -> float:
    """Inverted generational distance: mean over reference points of the
    minimum Euclidean distance to the front (lower is better)."""
    front = np.atleast_2d(np.asarray(front, dtype=np.float64))
    reference_front = np.atleast_2d(np.asarray(reference_front, dtype=np.float64))
    if front.size == 0 or reference_front.size == 0:
        raise EmptyFrontError("IGD requires non-empty fronts")
    if front.shape[1] != reference_front.shape[1]:
        raise DimensionMismatchError("front dimensions differ")
    diff = reference_front[:, None, :] - front[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    return float(np.mean(np.min(dist, axis=1)))


def hypervolume(front: np.ndarray, ref_point: np.ndarray) -> float:
    """Exact 2-D hypervolume of the region dominated by the front above
    ``ref_point`` (maximize-both), by a sweep over the first objective."""
    front = np.atleast_2d(np.asarray(front, dtype=np.float64))
    ref = np.asarray(ref_point, dtype=np.float64)
    if front.size == 0:
        raise EmptyFrontError("hypervolume requires a non-empty front")
    if front.shape[1] != 2 or ref.shape != (2,):
        raise DimensionMismatchError("2-D fronts only")
    for p in front:
        if not dominates(p, ref):
            raise PointBelowReferenceError(
                f"front point {p.tolist()} does not dominate reference {ref.tolist()}"
            )
    order = np.argsort(-front[:, 0], kind="stable")
    area = 0.0
    best_y = ref[1]
    for idx in order:
        x, y = front[idx]
        if y > best_y:
            area += (x - ref[0]) * (y - best_y)
            best_y = y
    return float(area)
