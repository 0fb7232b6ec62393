import numpy as np
import pytest

from moco import DesiredOutcome, LinearModel, NoFeasiblePoint, gower_distance, random_search, whatif_nearest
from moco.model_adapter import predict_batch


class StubGenerator(np.random.Generator):
    """Generator whose uniform draws are pinned; everything else delegates."""

    def __init__(self, fixed: float):
        super().__init__(np.random.PCG64(0))
        self._fixed = fixed

    def random(self, *args, **kwargs):
        if args or kwargs:
            return super().random(*args, **kwargs)
        return self._fixed


def height_model(schema):
    return LinearModel(schema, intercept=0.0, coefficients=[0.1], encoding=[("height", None)], link="identity")


def test_whatif_returns_x_star_when_feasible(mixed_schema, mixed_observed):
    model = height_model(mixed_schema)
    x_star = mixed_observed.rows[0]
    pred = predict_batch(model, [x_star])[0]
    target = DesiredOutcome(pred - 0.01, pred + 0.01)
    assert whatif_nearest(x_star, target, model, mixed_observed) == x_star


def test_whatif_picks_nearest_by_exhaustive_scan(mixed_schema, mixed_observed):
    model = height_model(mixed_schema)
    x_star = mixed_observed.rows[0]
    target = DesiredOutcome(0.7, 1.0)  # height in [7, 10]
    got = whatif_nearest(x_star, target, model, mixed_observed)
    ranges = mixed_observed.gower_ranges()
    feasible = [r for r in mixed_observed.rows if target.contains(predict_batch(model, [r])[0])]
    best = min(feasible, key=lambda r: gower_distance(r, x_star, mixed_schema, ranges))
    assert gower_distance(got, x_star, mixed_schema, ranges) == pytest.approx(
        gower_distance(best, x_star, mixed_schema, ranges)
    )
    assert got in mixed_observed.rows
    assert target.contains(predict_batch(model, [got])[0])


def test_whatif_no_feasible_point(mixed_schema, mixed_observed):
    model = height_model(mixed_schema)
    with pytest.raises(NoFeasiblePoint):
        whatif_nearest(mixed_observed.rows[0], DesiredOutcome(5.0, 6.0), model, mixed_observed)


def test_random_search_all_original_draw(mixed_schema, mixed_observed):
    model = height_model(mixed_schema)
    x_star = mixed_observed.rows[0]
    # a fair coin pinned at 0.4 keeps every feature at the original value
    rng = StubGenerator(0.4)
    archive = random_search(x_star, DesiredOutcome(0.9, 1.0), model, mixed_observed, mu=1, generations=1, seed=rng)
    assert [e.point for e in archive.entries] == [x_star]


def test_random_search_deterministic(mixed_schema, mixed_observed):
    model = height_model(mixed_schema)
    x_star = mixed_observed.rows[0]
    a = random_search(x_star, DesiredOutcome(0.9, 1.0), model, mixed_observed, 5, 10, seed=3)
    b = random_search(x_star, DesiredOutcome(0.9, 1.0), model, mixed_observed, 5, 10, seed=3)
    assert [e.point for e in a.entries] == [e.point for e in b.entries]
    assert a.hv_trace == b.hv_trace


def test_random_search_budget_and_trace(mixed_schema, mixed_observed):
    model = height_model(mixed_schema)
    x_star = mixed_observed.rows[0]
    archive = random_search(x_star, DesiredOutcome(0.9, 1.0), model, mixed_observed, 20, 30, seed=1)
    assert len(archive.entries) == 600
    assert len(archive.hv_trace) == 30
    assert all(x <= y for x, y in zip(archive.hv_trace, archive.hv_trace[1:]))


def test_random_search_values_from_observed_support(mixed_schema, mixed_observed):
    model = height_model(mixed_schema)
    x_star = mixed_observed.rows[0]
    archive = random_search(x_star, DesiredOutcome(0.9, 1.0), model, mixed_observed, 10, 10, seed=2)
    for e in archive.entries:
        for j, d in enumerate(mixed_schema.features):
            if d.is_numeric:
                lo, hi = mixed_observed.derived_ranges[j]
                assert lo <= e.point[j] <= hi or e.point[j] == x_star[j]
            else:
                assert e.point[j] in d.levels
