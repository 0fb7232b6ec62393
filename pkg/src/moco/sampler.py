"""Per-feature conditional samplers backing the plausibility-aware mutator.

For every feature a shallow CART tree is fit on the observed data,
predicting that feature from all the others. Each leaf keeps the raw
observed values that landed in it; sampling routes a context down the
tree and draws uniformly from the reached pool, so sampled values always
lie in the observed support of the feature.

Fitting delegates to scikit-learn (variance-reduction splits for numeric
targets, Gini for categorical ones); routing walks the exported node
arrays directly, which keeps per-mutation cost to a few comparisons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

from .feature_space import FeatureSchema, ObservedDataset


class DatasetTooSmall(ValueError):
    pass


@dataclass
class _FeatureTree:
    feature: np.ndarray  # context-column index per node, -2 at leaves
    threshold: np.ndarray
    left: np.ndarray  # -1 at leaves
    right: np.ndarray
    pools: dict[int, list]  # node id -> raw observed values

    def route(self, row: np.ndarray) -> int:
        node = 0
        while self.left[node] != -1:
            node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
        return int(node)

    @classmethod
    def single_leaf(cls, values) -> "_FeatureTree":
        return cls(
            feature=np.array([-2]),
            threshold=np.array([0.0]),
            left=np.array([-1]),
            right=np.array([-1]),
            pools={0: list(values)},
        )


def _encode_full(schema: FeatureSchema, rows) -> np.ndarray:
    """All features as one float matrix; categorical values become level codes."""
    out = np.empty((len(rows), schema.p))
    for j, d in enumerate(schema.features):
        if d.is_numeric:
            out[:, j] = [r[j] for r in rows]
        else:
            out[:, j] = [d.levels.index(r[j]) for r in rows]
    return out


class ConditionalSampler:
    def __init__(self, schema: FeatureSchema, trees: list[_FeatureTree]):
        self.schema = schema
        self._trees = trees

    def encode_context(self, feature: int, context) -> np.ndarray:
        """Encode a point-minus-one-feature into the tree's column layout."""
        row = np.empty(self.schema.p - 1)
        a = 0
        for j, d in enumerate(self.schema.features):
            if j == feature:
                continue
            v = context[a]
            row[a] = v if d.is_numeric else d.levels.index(v)
            a += 1
        return row

    def sample(self, feature: int, context, rng: np.random.Generator):
        tree = self._trees[feature]
        leaf = tree.route(self.encode_context(feature, context)) if self.schema.p > 1 else 0
        pool = tree.pools[leaf]
        return pool[int(rng.integers(len(pool)))]

    def leaf_pools(self, feature: int) -> dict[int, list]:
        return {k: list(v) for k, v in self._trees[feature].pools.items()}

    def to_debug_json(self) -> str:
        """Tree structure dump for debugging; format not stable."""
        out = []
        for j, t in enumerate(self._trees):
            out.append(
                {
                    "feature": self.schema.features[j].name,
                    "nodes": len(t.feature),
                    "split_columns": [int(f) for f in t.feature],
                    "thresholds": [float(x) for x in t.threshold],
                    "pool_sizes": {str(k): len(v) for k, v in sorted(t.pools.items())},
                }
            )
        return json.dumps(out, indent=2)


def fit_samplers(observed: ObservedDataset, max_depth: int = 3, min_leaf: int | None = None) -> ConditionalSampler:
    """Fit one conditional tree per feature on the observed rows.

    ``min_leaf`` defaults to max(10, n/20); pools stay robustly sized.
    """
    n = len(observed)
    if min_leaf is None:
        min_leaf = max(10, n // 20)
    if n < max(1, min_leaf):
        raise DatasetTooSmall(f"{n} rows < min_leaf={min_leaf}")
    schema = observed.schema
    full = _encode_full(schema, observed.rows)
    trees: list[_FeatureTree] = []
    for j, d in enumerate(schema.features):
        raw = [r[j] for r in observed.rows]
        if max_depth == 0 or schema.p == 1:
            trees.append(_FeatureTree.single_leaf(raw))
            continue
        X = np.delete(full, j, axis=1)
        y = full[:, j]
        if d.is_numeric:
            est = DecisionTreeRegressor(max_depth=max_depth, min_samples_leaf=min_leaf, random_state=0)
        else:
            est = DecisionTreeClassifier(criterion="gini", max_depth=max_depth, min_samples_leaf=min_leaf, random_state=0)
        est.fit(X, y.astype(int) if not d.is_numeric else y)
        leaf_ids = est.apply(X)
        pools: dict[int, list] = {}
        for leaf, value in zip(leaf_ids, raw):
            pools.setdefault(int(leaf), []).append(value)
        t = est.tree_
        trees.append(
            _FeatureTree(
                feature=t.feature.copy(),
                threshold=t.threshold.copy(),
                left=t.children_left.copy(),
                right=t.children_right.copy(),
                pools=pools,
            )
        )
    return ConditionalSampler(schema, trees)


def sample_conditional(sampler: ConditionalSampler, feature: int, context, rng: np.random.Generator):
    """Draw a value for ``feature`` given the other features' values."""
    return sampler.sample(feature, context, rng)
