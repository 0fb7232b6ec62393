"""Native comparison methods: nearest observed point and random search."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .evolution import ArchiveEntry, ParetoArchive
from .feature_space import DataPoint, ObservedDataset, gower_distance
from .model_adapter import PredictionModel, predict_batch
from .objectives import DesiredOutcome, ObjectiveContext, o1_target_distance


class NoFeasiblePoint(LookupError):
    pass


def whatif_nearest(
    x_star: DataPoint,
    target: DesiredOutcome,
    model: PredictionModel,
    observed: ObservedDataset,
) -> DataPoint:
    """Closest observed row (Gower) whose prediction attains the target.

    Ties break toward the lowest row index.
    """
    preds = predict_batch(model, observed.rows)
    ranges = observed.gower_ranges()
    best = None
    best_dist = None
    for i, (row, pred) in enumerate(zip(observed.rows, preds)):
        if not target.contains(pred):
            continue
        dist = gower_distance(row, x_star, observed.schema, ranges)
        if best_dist is None or dist < best_dist:
            best, best_dist = row, dist
    if best is None:
        raise NoFeasiblePoint("no observed point attains the target")
    return best


def random_search(
    x_star: Sequence,
    target: DesiredOutcome,
    model: PredictionModel,
    observed: ObservedDataset,
    mu: int,
    generations: int,
    seed: int | np.random.Generator = 0,
    k: int = 1,
) -> ParetoArchive:
    """Budget-matched uniform baseline.

    Every generation draws mu candidates independently: per feature a fair
    coin keeps the original value, otherwise the value is sampled
    uniformly from the observed range (numeric) or the levels
    (categorical). The archive accumulates across generations with the
    usual cumulative hypervolume trace.
    """
    if mu < 1 or generations < 1:
        raise ValueError("mu and generations must be >= 1")
    schema = observed.schema
    x_star = schema.validate_point(x_star)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    pred_star = predict_batch(model, [x_star])[0]
    ref = (o1_target_distance(pred_star, target), 1.0, float(schema.p), 1.0)
    context = ObjectiveContext(model, x_star, target, observed, k=k)
    archive = ParetoArchive(ref)

    for gen in range(generations):
        points = []
        for _ in range(mu):
            values = list(x_star)
            for j, d in enumerate(schema.features):
                if rng.random() < 0.5:
                    continue  # keep the original value
                if d.is_numeric:
                    lo, hi = observed.derived_ranges[j]
                    if d.kind == "integer":
                        values[j] = float(rng.integers(int(np.ceil(lo)), int(np.floor(hi)) + 1))
                    else:
                        values[j] = float(rng.uniform(lo, hi))
                else:
                    values[j] = d.levels[int(rng.integers(len(d.levels)))]
            points.append(tuple(values))
        preds, objs = context.evaluate_batch(points)
        archive.add_generation(
            [ArchiveEntry(pt, pr, ob, gen) for pt, pr, ob in zip(points, preds, objs)]
        )
    return archive
