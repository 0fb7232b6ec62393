"""Domination, hypervolume, coverage rate and counterfactual-set truncation.

Hypervolume is exact up to 4 dimensions: the outer dimension (chosen as
the one with the fewest distinct values, which in practice is the integer
sparsity objective) is swept in slabs, and each slab reduces to a 3-D
sweep over an incrementally maintained 2-D staircase. Points outside the
reference box are clipped to it first, so they simply contribute zero
volume.
"""

from __future__ import annotations

import bisect
import csv
from typing import Sequence

import numpy as np


class EmptyComparisonSet(ValueError):
    pass


def dominates(a, b) -> bool:
    """a <= b in every component and a < b in at least one."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def nondominated_indices(objectives: Sequence) -> list[int]:
    """Indices of points not strictly dominated by any other point."""
    arr = np.asarray(objectives, dtype=float)
    n = len(arr)
    out = []
    for i in range(n):
        le = (arr <= arr[i]).all(axis=1)
        lt = (arr < arr[i]).any(axis=1)
        if not np.any(le & lt):
            out.append(i)
    return out


def _stair_insert(stair: list, x0: float, y0: float, rx: float, ry: float) -> float:
    """Insert (x0, y0) into a 2-D minimization staircase; return the area gained.

    ``stair`` is kept sorted by x with strictly decreasing y.
    """
    i = bisect.bisect_left(stair, (x0, float("-inf")))
    if i > 0 and stair[i - 1][1] <= y0:
        return 0.0
    if i < len(stair) and stair[i][0] == x0 and stair[i][1] <= y0:
        return 0.0
    cur_x, cur_y = x0, (stair[i - 1][1] if i > 0 else ry)
    gain = 0.0
    j = i
    while j < len(stair) and stair[j][1] >= y0:
        gain += (stair[j][0] - cur_x) * (cur_y - y0)
        cur_x, cur_y = stair[j]
        j += 1
    end_x = stair[j][0] if j < len(stair) else rx
    gain += (end_x - cur_x) * (cur_y - y0)
    stair[i:j] = [(x0, y0)]
    return gain


def _hv3d(pts: Sequence[tuple], rx: float, ry: float, rz: float) -> float:
    """Exact 3-D dominated volume: sweep z while growing a 2-D staircase."""
    order = sorted(pts, key=lambda t: t[2])
    stair: list = []
    vol = 0.0
    area = 0.0
    prev_z = None
    for x, y, z in order:
        if prev_z is not None:
            vol += area * (z - prev_z)
        prev_z = z
        area += _stair_insert(stair, x, y, rx, ry)
    if prev_z is not None:
        vol += area * (rz - prev_z)
    return vol


def hypervolume(points: Sequence, ref: Sequence[float]) -> float:
    """Volume jointly dominated by ``points`` within the box below ``ref``."""
    ref = tuple(float(r) for r in ref)
    d = len(ref)
    pts = set()
    for p in points:
        q = tuple(min(float(p[i]), ref[i]) for i in range(d))
        if all(q[i] < ref[i] for i in range(d)):
            pts.add(q)
    if not pts:
        return 0.0
    pts = sorted(pts)
    if d == 1:
        return ref[0] - min(p[0] for p in pts)
    if d == 2:
        stair: list = []
        return sum(_stair_insert(stair, x, y, ref[0], ref[1]) for x, y in pts)
    if d == 3:
        return _hv3d(pts, *ref)
    if d != 4:
        raise ValueError("hypervolume supports at most 4 dimensions")

    dim = min(range(4), key=lambda i: len({p[i] for p in pts}))
    others = [i for i in range(4) if i != dim]
    by_val: dict[float, list] = {}
    for p in pts:
        by_val.setdefault(p[dim], []).append((p[others[0]], p[others[1]], p[others[2]]))
    vals = sorted(by_val)
    vol = 0.0
    active: list = []
    for k, v in enumerate(vals):
        active.extend(by_val[v])
        next_v = vals[k + 1] if k + 1 < len(vals) else ref[dim]
        if next_v > v:
            vol += (next_v - v) * _hv3d(active, ref[others[0]], ref[others[1]], ref[others[2]])
    return vol


def coverage_rate(ours: Sequence, theirs: Sequence) -> float:
    """Fraction of ``theirs`` strictly dominated by at least one of ``ours``.

    Both sets are expected to be pre-filtered to target-attaining points.
    Identical objective vectors do not count as covered.
    """
    if len(theirs) == 0:
        raise EmptyComparisonSet("nothing to compare against")
    if len(ours) == 0:
        return 0.0
    a = np.asarray(ours, dtype=float)
    covered = 0
    for t in np.asarray(theirs, dtype=float):
        le = (a <= t).all(axis=1)
        lt = (a < t).any(axis=1)
        if np.any(le & lt):
            covered += 1
    return covered / len(theirs)


def truncate_counterfactuals(
    objectives: Sequence,
    predictions: Sequence[float],
    target,
    limit: int,
    ref: Sequence[float],
) -> list[int]:
    """Pick up to ``limit`` points by greedy marginal hypervolume gain,
    exhausting target-attaining points before the rest.

    Returns selected positions; ties in gain break toward the lowest
    index, so the result is deterministic for a fixed input order.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    n = len(objectives)
    if n <= limit:
        return list(range(n))
    attaining = [i for i in range(n) if target.contains(predictions[i])]
    rest = [i for i in range(n) if not target.contains(predictions[i])]
    selected: list[int] = []
    chosen_objs: list = []
    for pool in (attaining, rest):
        remaining = list(pool)
        while remaining and len(selected) < limit:
            base = hypervolume(chosen_objs, ref)
            best_i = None
            best_gain = -1.0
            for i in remaining:
                gain = hypervolume(chosen_objs + [objectives[i]], ref) - base
                if best_i is None or gain > best_gain:
                    best_i, best_gain = i, gain
            selected.append(best_i)
            chosen_objs.append(objectives[best_i])
            remaining.remove(best_i)
        if len(selected) >= limit:
            break
    return selected


def write_hv_trace(path, trace: Sequence[float]):
    """CSV export of the per-generation hypervolume trace."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "hv"])
        for g, hv in enumerate(trace):
            w.writerow([g, repr(float(hv))])


class FrontTracker:
    """Nondominated front of a growing point set, maintained incrementally.

    ``add`` reports whether the dominated hypervolume may have changed,
    which lets callers skip recomputing it for dominated or duplicate
    arrivals.
    """

    def __init__(self, dim: int = 4):
        self.indices: list[int] = []
        self._arr = np.empty((0, dim))

    def add(self, index: int, obj) -> bool:
        v = np.asarray(obj, dtype=float)
        if self.indices:
            le = (self._arr <= v).all(axis=1)
            lt = (self._arr < v).any(axis=1)
            if np.any(le & lt):
                return False
            if np.any((self._arr == v).all(axis=1)):
                self.indices.append(index)
                self._arr = np.vstack([self._arr, v[None, :]])
                return False
            ge = (self._arr >= v).all(axis=1)
            gt = (self._arr > v).any(axis=1)
            keep = ~(ge & gt)
            if not keep.all():
                self._arr = self._arr[keep]
                self.indices = [i for i, k in zip(self.indices, keep) if k]
        self.indices.append(index)
        self._arr = np.vstack([self._arr, v[None, :]])
        return True

    def objectives(self) -> np.ndarray:
        return self._arr.copy()
