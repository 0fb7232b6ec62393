import numpy as np
import pytest
from scipy.stats import chisquare

from moco import FeatureDescriptor, FeatureSchema, ObservedDataset, fit_samplers, sample_conditional
from moco.sampler import DatasetTooSmall


def two_feature_dataset(pairs):
    schema = FeatureSchema(
        (
            FeatureDescriptor("a", "numerical", range=(0.0, 10.0)),
            FeatureDescriptor("b", "numerical", range=(0.0, 10.0)),
        )
    )
    return ObservedDataset(schema, [schema.validate_point(p) for p in pairs])


def test_degenerate_dependence_isolates_values():
    # feature b always equals feature a; with pure leaves every pool is a singleton
    values = [1.0, 3.0, 6.0, 9.0]
    ds = two_feature_dataset([(v, v) for v in values for _ in range(12)])
    sampler = fit_samplers(ds, max_depth=4, min_leaf=1)
    pools = sampler.leaf_pools(1)
    assert all(len(set(pool)) == 1 for pool in pools.values())
    rng = np.random.default_rng(0)
    for v in values:
        assert sample_conditional(sampler, 1, (v,), rng) == v


def test_depth_zero_single_marginal_pool(mixed_observed):
    sampler = fit_samplers(mixed_observed, max_depth=0, min_leaf=1)
    pools = sampler.leaf_pools(0)
    assert len(pools) == 1
    assert sorted(next(iter(pools.values()))) == sorted(r[0] for r in mixed_observed.rows)


def test_min_leaf_equal_to_n_gives_single_leaf(mixed_observed):
    sampler = fit_samplers(mixed_observed, max_depth=5, min_leaf=len(mixed_observed))
    for j in range(mixed_observed.schema.p):
        assert len(sampler.leaf_pools(j)) == 1


def test_dataset_too_small(mixed_observed):
    with pytest.raises(DatasetTooSmall):
        fit_samplers(mixed_observed, max_depth=3, min_leaf=len(mixed_observed) + 1)


def test_single_leaf_sampling_matches_marginal():
    # categorical target with a known marginal; chi-squared over 10k draws
    schema = FeatureSchema(
        (
            FeatureDescriptor("x", "numerical", range=(0.0, 1.0)),
            FeatureDescriptor("c", "categorical", levels=("a", "b", "c")),
        )
    )
    rng = np.random.default_rng(11)
    rows = []
    for _ in range(300):
        rows.append((float(rng.uniform()), ("a", "b", "c")[rng.choice(3, p=[0.5, 0.3, 0.2])]))
    ds = ObservedDataset(schema, [schema.validate_point(r) for r in rows])
    sampler = fit_samplers(ds, max_depth=0, min_leaf=1)
    draw_rng = np.random.default_rng(99)
    draws = [sample_conditional(sampler, 1, (0.5,), draw_rng) for _ in range(10_000)]
    pool = [r[1] for r in ds.rows]
    expected = {lvl: pool.count(lvl) / len(pool) * 10_000 for lvl in ("a", "b", "c")}
    observed = {lvl: draws.count(lvl) for lvl in ("a", "b", "c")}
    stat = chisquare([observed[l] for l in ("a", "b", "c")], [expected[l] for l in ("a", "b", "c")])
    assert stat.pvalue > 0.01


def test_singleton_pool_always_returned():
    ds = two_feature_dataset([(1.0, 7.0)] * 20)
    sampler = fit_samplers(ds, max_depth=3, min_leaf=1)
    rng = np.random.default_rng(1)
    assert all(sample_conditional(sampler, 1, (1.0,), rng) == 7.0 for _ in range(50))


def test_samples_stay_in_observed_support(mixed_observed):
    sampler = fit_samplers(mixed_observed)
    rng = np.random.default_rng(5)
    for j in range(mixed_observed.schema.p):
        support = {r[j] for r in mixed_observed.rows}
        context = tuple(v for i, v in enumerate(mixed_observed.rows[0]) if i != j)
        for _ in range(100):
            assert sample_conditional(sampler, j, context, rng) in support


def test_refit_is_deterministic(mixed_observed):
    s1 = fit_samplers(mixed_observed)
    s2 = fit_samplers(mixed_observed)
    assert s1.to_debug_json() == s2.to_debug_json()
    r1 = np.random.default_rng(3)
    r2 = np.random.default_rng(3)
    ctx = tuple(v for i, v in enumerate(mixed_observed.rows[2]) if i != 0)
    a = [sample_conditional(s1, 0, ctx, r1) for _ in range(25)]
    b = [sample_conditional(s2, 0, ctx, r2) for _ in range(25)]
    assert a == b


def test_every_row_routes_to_a_pool(mixed_observed):
    sampler = fit_samplers(mixed_observed)
    for j in range(mixed_observed.schema.p):
        pools = sampler.leaf_pools(j)
        total = sum(len(p) for p in pools.values())
        assert total == len(mixed_observed)
        assert all(len(p) > 0 for p in pools.values())
        for row in mixed_observed.rows:
            ctx = tuple(v for i, v in enumerate(row) if i != j)
            encoded = sampler.encode_context(j, ctx)
            leaf = sampler._trees[j].route(encoded)
            assert leaf in pools
