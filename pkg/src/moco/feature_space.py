"""Mixed feature spaces: schemas, validation, Gower distances, dataset ingestion.

A feature space is an ordered list of descriptors. Numerical and integer
features carry a [lower, upper] range, categorical and binary features an
ordered list of levels. Data points are plain tuples aligned with the
schema order. Everything here is immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NUMERIC_KINDS = ("numerical", "integer")
CATEGORICAL_KINDS = ("categorical", "binary")
KINDS = NUMERIC_KINDS + CATEGORICAL_KINDS

#: One mixed-type feature vector, ordered like the schema.
DataPoint = tuple


class SchemaMismatch(ValueError):
    """Data disagrees with the schema (header order, unknown level, bad kind)."""


class MissingValue(ValueError):
    """A dataset cell is empty."""


class ParseError(ValueError):
    """A file could not be parsed at all (bad JSON, non-numeric cell, ...)."""


def _check_bounds(name: str, bounds) -> tuple[float, float]:
    try:
        lo, hi = float(bounds[0]), float(bounds[1])
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"feature {name!r}: bounds must be a [lower, upper] pair") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ParseError(f"feature {name!r}: bounds must be finite")
    if lo > hi:
        raise SchemaMismatch(f"feature {name!r}: lower bound {lo} exceeds upper bound {hi}")
    return lo, hi


@dataclass(frozen=True)
class FeatureDescriptor:
    """Declares one feature: its kind, admissible values and actionability.

    ``range`` applies to numerical/integer kinds, ``levels`` to
    categorical/binary kinds. ``user_bounds`` optionally tightens the range
    for actionability capping; it never widens it.
    """

    name: str
    kind: str
    range: tuple[float, float] | None = None
    levels: tuple[str, ...] | None = None
    actionable: bool = True
    user_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatch(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.is_numeric:
            if self.range is None:
                raise SchemaMismatch(f"feature {self.name!r}: {self.kind} feature needs a range")
            if self.levels is not None:
                raise SchemaMismatch(f"feature {self.name!r}: {self.kind} feature must not have levels")
            lo, hi = _check_bounds(self.name, self.range)
            object.__setattr__(self, "range", (lo, hi))
            if self.kind == "integer" and (lo != int(lo) or hi != int(hi)):
                raise SchemaMismatch(f"feature {self.name!r}: integer feature needs integer bounds")
            if self.user_bounds is not None:
                ulo, uhi = _check_bounds(self.name, self.user_bounds)
                if ulo < lo or uhi > hi:
                    raise SchemaMismatch(
                        f"feature {self.name!r}: user_bounds [{ulo}, {uhi}] outside range [{lo}, {hi}]"
                    )
                if self.kind == "integer" and (ulo != int(ulo) or uhi != int(uhi)):
                    raise SchemaMismatch(f"feature {self.name!r}: integer feature needs integer user_bounds")
                object.__setattr__(self, "user_bounds", (ulo, uhi))
        else:
            if self.range is not None:
                raise SchemaMismatch(f"feature {self.name!r}: {self.kind} feature must not have a range")
            if self.user_bounds is not None:
                raise SchemaMismatch(f"feature {self.name!r}: user_bounds only apply to numeric features")
            if self.levels is None or len(self.levels) < 2:
                raise SchemaMismatch(f"feature {self.name!r}: {self.kind} feature needs >= 2 levels")
            if self.kind == "binary" and len(self.levels) != 2:
                raise SchemaMismatch(f"feature {self.name!r}: binary feature needs exactly 2 levels")
            levels = tuple(str(v) for v in self.levels)
            if len(set(levels)) != len(levels):
                raise SchemaMismatch(f"feature {self.name!r}: duplicate levels")
            object.__setattr__(self, "levels", levels)

    @property
    def is_numeric(self) -> bool:
        return self.kind in NUMERIC_KINDS

    def effective_bounds(self) -> tuple[float, float]:
        """Capping bounds: user_bounds when set, else the declared range."""
        return self.user_bounds if self.user_bounds is not None else self.range

    def validate_value(self, value):
        """Return the canonical in-schema form of ``value`` or raise SchemaMismatch."""
        if self.is_numeric:
            if isinstance(value, str):
                raise SchemaMismatch(f"feature {self.name!r}: expected a number, got {value!r}")
            v = float(value)
            if not math.isfinite(v):
                raise SchemaMismatch(f"feature {self.name!r}: non-finite value")
            if self.kind == "integer" and v != int(v):
                raise SchemaMismatch(f"feature {self.name!r}: expected an integer, got {value!r}")
            lo, hi = self.range
            if v < lo or v > hi:
                raise SchemaMismatch(f"feature {self.name!r}: value {v} outside range [{lo}, {hi}]")
            return v
        value = str(value)
        if value not in self.levels:
            raise SchemaMismatch(f"feature {self.name!r}: unknown level {value!r}")
        return value


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature declarations; order defines the layout of data points."""

    features: tuple[FeatureDescriptor, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.features:
            raise SchemaMismatch("schema needs at least one feature")
        names = [d.name for d in self.features]
        if len(set(names)) != len(names):
            raise SchemaMismatch("duplicate feature names")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @property
    def p(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.features]

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaMismatch(f"unknown feature {name!r}") from None

    def numeric_indices(self) -> list[int]:
        return [j for j, d in enumerate(self.features) if d.is_numeric]

    def categorical_indices(self) -> list[int]:
        return [j for j, d in enumerate(self.features) if not d.is_numeric]

    def validate_point(self, values: Sequence) -> DataPoint:
        if len(values) != self.p:
            raise SchemaMismatch(f"expected {self.p} values, got {len(values)}")
        return tuple(d.validate_value(v) for d, v in zip(self.features, values))

    def with_frozen(self, names: Iterable[str]) -> "FeatureSchema":
        """Copy of the schema with the named features marked non-actionable."""
        frozen = set(names)
        for n in frozen:
            self.index_of(n)
        feats = tuple(
            FeatureDescriptor(d.name, d.kind, d.range, d.levels, d.actionable and d.name not in frozen, d.user_bounds)
            for d in self.features
        )
        return FeatureSchema(feats)

    def with_user_bounds(self, bounds: dict[str, tuple[float, float]]) -> "FeatureSchema":
        """Copy of the schema with per-feature capping bounds applied."""
        for n in bounds:
            if not self.features[self.index_of(n)].is_numeric:
                raise SchemaMismatch(f"feature {n!r}: bounds only apply to numeric features")
        feats = tuple(
            FeatureDescriptor(d.name, d.kind, d.range, d.levels, d.actionable, bounds.get(d.name, d.user_bounds))
            for d in self.features
        )
        return FeatureSchema(feats)

    def to_json_obj(self) -> list[dict]:
        out = []
        for d in self.features:
            entry = {"name": d.name, "kind": d.kind, "actionable": d.actionable}
            if d.is_numeric:
                entry["range"] = list(d.range)
                if d.user_bounds is not None:
                    entry["user_bounds"] = list(d.user_bounds)
            else:
                entry["levels"] = list(d.levels)
            out.append(entry)
        return out


def schema_from_obj(obj) -> FeatureSchema:
    if not isinstance(obj, list):
        raise ParseError("schema file must contain a JSON array of feature entries")
    feats = []
    for entry in obj:
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise ParseError(f"bad schema entry: {entry!r}")
        feats.append(
            FeatureDescriptor(
                name=str(entry["name"]),
                kind=str(entry["kind"]),
                range=tuple(entry["range"]) if entry.get("range") is not None else None,
                levels=tuple(entry["levels"]) if entry.get("levels") is not None else None,
                actionable=bool(entry.get("actionable", True)),
                user_bounds=tuple(entry["user_bounds"]) if entry.get("user_bounds") is not None else None,
            )
        )
    return FeatureSchema(tuple(feats))


def load_schema(schema_path) -> FeatureSchema:
    try:
        with open(schema_path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"schema file {schema_path}: {exc}") from exc
    return schema_from_obj(obj)


class ObservedDataset:
    """A validated set of rows plus per-feature ranges extracted from them.

    The ranges drive Gower normalization and are recomputed whenever rows
    change (e.g. after excluding the explained instance). Encoded matrices
    for vectorized distance work are built once at construction.
    """

    def __init__(self, schema: FeatureSchema, rows: Sequence[DataPoint]):
        self.schema = schema
        self.rows = tuple(tuple(r) for r in rows)
        num_idx = schema.numeric_indices()
        cat_idx = schema.categorical_indices()
        self.derived_ranges: tuple = tuple(
            (min(r[j] for r in self.rows), max(r[j] for r in self.rows)) if self.rows and j in num_idx else None
            for j in range(schema.p)
        )
        self._num_idx = num_idx
        self._cat_idx = cat_idx
        self.num_matrix, self.cat_matrix = encode_points(schema, self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def gower_ranges(self) -> list[float]:
        """Per-feature normalization widths (0.0 at categorical positions)."""
        return [
            (self.derived_ranges[j][1] - self.derived_ranges[j][0]) if self.derived_ranges[j] is not None else 0.0
            for j in range(self.schema.p)
        ]

    def exclude_row(self, index: int) -> "ObservedDataset":
        if index < 0 or index >= len(self.rows):
            raise IndexError(f"row {index} out of range")
        return ObservedDataset(self.schema, self.rows[:index] + self.rows[index + 1 :])


def load_dataset(csv_path, schema_path) -> ObservedDataset:
    """Read a CSV (header row, comma separated) against its JSON schema."""
    schema = load_schema(schema_path)
    rows: list[DataPoint] = []
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{csv_path}: empty file") from None
        if [h.strip() for h in header] != schema.names:
            raise SchemaMismatch(f"{csv_path}: header {header!r} does not match schema features {schema.names!r}")
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != schema.p:
                raise ParseError(f"{csv_path}:{lineno}: expected {schema.p} cells, got {len(cells)}")
            values = []
            for d, cell in zip(schema.features, cells):
                cell = cell.strip()
                if cell == "":
                    raise MissingValue(f"{csv_path}:{lineno}: empty cell for feature {d.name!r}")
                if d.is_numeric:
                    try:
                        values.append(float(cell))
                    except ValueError:
                        raise ParseError(
                            f"{csv_path}:{lineno}: non-numeric value {cell!r} for feature {d.name!r}"
                        ) from None
                else:
                    values.append(cell)
            rows.append(schema.validate_point(values))
    if not rows:
        raise ParseError(f"{csv_path}: no data rows")
    return ObservedDataset(schema, rows)


def gower_delta(xj, yj, descriptor: FeatureDescriptor, range_j: float) -> float:
    """Per-feature dissimilarity in [0, 1].

    Numeric kinds: |xj - yj| / range_j clipped to [0, 1]. A degenerate
    range (constant feature in the observed data) keeps the inequality
    signal: 0 when equal, 1 otherwise. Categorical kinds: inequality
    indicator.
    """
    if descriptor.is_numeric:
        if range_j <= 0.0:
            return 0.0 if xj == yj else 1.0
        return min(abs(xj - yj) / range_j, 1.0)
    return 0.0 if xj == yj else 1.0


def gower_distance(x: DataPoint, y: DataPoint, schema: FeatureSchema, ranges: Sequence[float]) -> float:
    """Mean of per-feature Gower deltas; symmetric and bounded in [0, 1]."""
    total = 0.0
    for j, d in enumerate(schema.features):
        total += gower_delta(x[j], y[j], d, ranges[j])
    return total / schema.p


def round_half_away(v: float) -> float:
    """Round to the nearest integer, halves away from zero."""
    return math.floor(v + 0.5) if v >= 0 else math.ceil(v - 0.5)


def clamp_to_ranges(x: Sequence, schema: FeatureSchema) -> DataPoint:
    """Cap numeric values into their capping bounds; round integer kinds.

    Categorical values pass through untouched. Idempotent.
    """
    out = list(x)
    for j, d in enumerate(schema.features):
        if not d.is_numeric:
            continue
        lo, hi = d.effective_bounds()
        v = min(max(float(out[j]), lo), hi)
        if d.kind == "integer":
            v = round_half_away(v)
        out[j] = v
    return tuple(out)


def encode_points(schema: FeatureSchema, points: Sequence[DataPoint]) -> tuple[np.ndarray, np.ndarray]:
    """Split points into a float matrix (numeric features) and a level-code
    matrix (categorical features), both in schema order within their block."""
    num_idx = schema.numeric_indices()
    cat_idx = schema.categorical_indices()
    n = len(points)
    num = np.empty((n, len(num_idx)), dtype=float)
    cat = np.empty((n, len(cat_idx)), dtype=np.int32)
    for i, pt in enumerate(points):
        for a, j in enumerate(num_idx):
            num[i, a] = pt[j]
        for a, j in enumerate(cat_idx):
            cat[i, a] = schema.features[j].levels.index(pt[j])
    return num, cat


def gower_matrix(
    a_num: np.ndarray,
    a_cat: np.ndarray,
    b_num: np.ndarray,
    b_cat: np.ndarray,
    num_widths: np.ndarray,
    p: int,
) -> np.ndarray:
    """Pairwise Gower distances between two encoded point sets, shape (nA, nB)."""
    n_a = a_num.shape[0]
    n_b = b_num.shape[0]
    total = np.zeros((n_a, n_b))
    if a_num.shape[1]:
        diff = np.abs(a_num[:, None, :] - b_num[None, :, :])
        pos = num_widths > 0
        scaled = np.empty_like(diff)
        scaled[:, :, pos] = np.minimum(diff[:, :, pos] / num_widths[pos], 1.0)
        scaled[:, :, ~pos] = (diff[:, :, ~pos] > 0).astype(float)
        total += scaled.sum(axis=2)
    if a_cat.shape[1]:
        total += (a_cat[:, None, :] != b_cat[None, :, :]).sum(axis=2)
    return total / p
