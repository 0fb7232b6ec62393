"""The four search objectives and the hypervolume reference point.

All four are minimized:

  o1  distance between the model prediction and the desired outcome set
  o2  Gower distance to the explained instance
  o3  number of changed features (L0)
  o4  weighted Gower distance to the k nearest observed points

``ObjectiveContext`` bundles everything evaluation needs and carries
precomputed encodings so whole offspring batches evaluate in a few numpy
passes. MOCO_THREADS caps how many worker threads a large batch may use.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .feature_space import DataPoint, FeatureSchema, ObservedDataset, encode_points, gower_matrix
from .model_adapter import PredictionModel, predict_batch

REL_TOL_CHANGED = 1e-12  # numeric equality tolerance for o3


class EmptyDataset(ValueError):
    pass


class DesiredOutcome(NamedTuple):
    """Target set for the prediction: an interval, possibly open-ended.

    ``lower == upper`` encodes a single target value.
    """

    lower: float
    upper: float
    lower_open: bool = False
    upper_open: bool = False

    def contains(self, prediction: float) -> bool:
        lo_ok = prediction > self.lower if self.lower_open else prediction >= self.lower
        hi_ok = prediction < self.upper if self.upper_open else prediction <= self.upper
        return lo_ok and hi_ok

    @classmethod
    def parse(cls, text: str) -> "DesiredOutcome":
        """Parse ``a:b``; a leading ``(`` opens the lower endpoint, a
        trailing ``)`` the upper. A bare number is a single target value."""
        s = text.strip()
        lower_open = s.startswith("(")
        upper_open = s.endswith(")")
        s = s.removeprefix("(").removeprefix("[").removesuffix(")").removesuffix("]")
        parts = s.split(":")
        try:
            if len(parts) == 1:
                lo = hi = float(parts[0])
            elif len(parts) == 2:
                lo, hi = float(parts[0]), float(parts[1])
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"cannot parse target {text!r}; expected 'a:b' or a single value") from None
        if lo > hi:
            raise ValueError(f"target {text!r}: lower bound exceeds upper bound")
        return cls(lo, hi, lower_open, upper_open)

    def describe(self) -> str:
        if self.lower == self.upper:
            return repr(self.lower)
        return f"{'(' if self.lower_open else '['}{self.lower!r}, {self.upper!r}{')' if self.upper_open else ']'}"


class ObjectiveVector(NamedTuple):
    o1: float
    o2: float
    o3: int
    o4: float


def o1_target_distance(prediction: float, target: DesiredOutcome) -> float:
    """Distance from the prediction to the closure of the target set.

    Zero inside the target. At an open endpoint the infimum is still zero
    even though membership is false.
    """
    if prediction < target.lower:
        return target.lower - prediction
    if prediction > target.upper:
        return prediction - target.upper
    return 0.0


def o2_proximity(x: DataPoint, x_star: DataPoint, schema: FeatureSchema, ranges: Sequence[float]) -> float:
    from .feature_space import gower_distance

    return gower_distance(x, x_star, schema, ranges)


def values_changed(xj, yj, descriptor) -> bool:
    if descriptor.is_numeric:
        return not math.isclose(xj, yj, rel_tol=REL_TOL_CHANGED, abs_tol=0.0)
    return xj != yj


def o3_sparsity(x: DataPoint, x_star: DataPoint, schema: FeatureSchema) -> int:
    return sum(values_changed(x[j], x_star[j], d) for j, d in enumerate(schema.features))


def o4_plausibility(
    x: DataPoint,
    observed: ObservedDataset,
    k: int = 1,
    weights: Sequence[float] | None = None,
) -> float:
    """Weighted mean Gower distance to the k nearest observed points.

    Neighbor ties break toward the lowest row index. Default weights are
    uniform 1/k.
    """
    if len(observed) == 0:
        raise EmptyDataset("no observed rows")
    if k < 1 or k > len(observed):
        raise ValueError(f"k={k} out of range for {len(observed)} observed rows")
    if weights is None:
        weights = [1.0 / k] * k
    if len(weights) != k:
        raise ValueError("need one weight per neighbor")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    x_num, x_cat = encode_points(observed.schema, [x])
    widths = np.asarray(observed.gower_ranges())[observed.schema.numeric_indices()]
    dists = gower_matrix(x_num, x_cat, observed.num_matrix, observed.cat_matrix, widths, observed.schema.p)[0]
    order = np.argsort(dists, kind="stable")[:k]
    return float(sum(w * dists[i] for w, i in zip(weights, order)))


ReferencePoint = tuple


def reference_point(x_star: DataPoint, target: DesiredOutcome, model: PredictionModel, p: int) -> ReferencePoint:
    """Worst-case objective corner (o1 of the explained instance, 1, p, 1)."""
    pred = predict_batch(model, [x_star])[0]
    return (o1_target_distance(pred, target), 1.0, float(p), 1.0)


@dataclass
class ObjectiveContext:
    """Everything needed to score candidates, with cached encodings."""

    model: PredictionModel
    x_star: DataPoint
    target: DesiredOutcome
    observed: ObservedDataset
    k: int = 1
    weights: Sequence[float] | None = None

    def __post_init__(self):
        schema = self.observed.schema
        self.schema = schema
        self.ranges = self.observed.gower_ranges()
        self._num_idx = schema.numeric_indices()
        self._cat_idx = schema.categorical_indices()
        self._widths = np.asarray(self.ranges)[self._num_idx]
        self._star_num, self._star_cat = encode_points(schema, [self.x_star])
        if self.weights is None:
            self.weights = [1.0 / self.k] * self.k
        if self.k < 1 or self.k > len(self.observed):
            raise ValueError(f"k={self.k} out of range for {len(self.observed)} observed rows")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        self._threads = max(1, int(os.environ.get("MOCO_THREADS", "1") or 1))

    def _score_block(self, points, preds) -> list[ObjectiveVector]:
        schema = self.schema
        num, cat = encode_points(schema, points)
        widths = self._widths
        pos = widths > 0

        # o2 and per-feature deltas vs x*
        dnum = np.abs(num - self._star_num)
        scaled = np.empty_like(dnum)
        scaled[:, pos] = np.minimum(dnum[:, pos] / widths[pos], 1.0)
        scaled[:, ~pos] = (dnum[:, ~pos] > 0).astype(float)
        cat_diff = cat != self._star_cat
        o2 = (scaled.sum(axis=1) + cat_diff.sum(axis=1)) / schema.p

        # o3 with relative numeric tolerance
        tol = REL_TOL_CHANGED * np.maximum(np.abs(num), np.abs(self._star_num))
        num_changed = dnum > tol
        o3 = num_changed.sum(axis=1) + cat_diff.sum(axis=1)

        # o4: stable k-nearest over the observed set
        dists = gower_matrix(num, cat, self.observed.num_matrix, self.observed.cat_matrix, widths, schema.p)
        if self.k == 1:
            o4 = dists.min(axis=1)
        else:
            order = np.argsort(dists, axis=1, kind="stable")[:, : self.k]
            nearest = np.take_along_axis(dists, order, axis=1)
            o4 = nearest @ np.asarray(self.weights)

        return [
            ObjectiveVector(o1_target_distance(pr, self.target), float(a), int(b), float(c))
            for pr, a, b, c in zip(preds, o2, o3, o4)
        ]

    def evaluate_batch(self, points: Sequence[DataPoint]) -> tuple[list[float], list[ObjectiveVector]]:
        """Predict once, then score; order preserved."""
        if not points:
            return [], []
        preds = predict_batch(self.model, points)
        if self._threads > 1 and len(points) >= 4 * self._threads:
            size = (len(points) + self._threads - 1) // self._threads
            blocks = [(points[i : i + size], preds[i : i + size]) for i in range(0, len(points), size)]
            with ThreadPoolExecutor(max_workers=self._threads) as pool:
                results = list(pool.map(lambda b: self._score_block(*b), blocks))
            objs = [o for block in results for o in block]
        else:
            objs = self._score_block(points, preds)
        return preds, objs


def evaluate_objectives(x: DataPoint, context: ObjectiveContext) -> ObjectiveVector:
    """Score a single point (one model prediction)."""
    _, objs = context.evaluate_batch([x])
    return objs[0]
