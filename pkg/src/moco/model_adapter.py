"""Uniform batch-prediction interface over arbitrary models.

Two adapters ship with the engine: an in-process linear model (the test
and demo workhorse) and an external-process model speaking a line
protocol. On top of ``predict_batch`` this module provides ICE curves and
two-feature response-surface grids, both evaluated with all other
features pinned to the instance under explanation.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .feature_space import DataPoint, FeatureSchema, ObservedDataset, ParseError, SchemaMismatch


class ExternalProcessFailure(RuntimeError):
    """The child process died, answered garbage, or miscounted predictions."""


class PredictionModel(Protocol):
    def predict_batch(self, batch: Sequence[DataPoint]) -> list[float]: ...


def predict_batch(model: PredictionModel, batch: Sequence[DataPoint]) -> list[float]:
    """One prediction per point, order preserved."""
    preds = model.predict_batch(batch)
    if len(preds) != len(batch):
        raise ExternalProcessFailure(f"model returned {len(preds)} predictions for {len(batch)} points")
    return preds


class LinearModel:
    """Linear form over one-hot encoded features, with identity or logistic link.

    ``encoding`` lists the encoded columns in coefficient order: a bare
    feature name for numeric columns, ``(feature, level)`` for one-hot
    categorical columns.
    """

    def __init__(self, schema: FeatureSchema, intercept: float, coefficients: Sequence[float], encoding, link: str):
        if link not in ("identity", "logistic"):
            raise ParseError(f"unknown link {link!r}")
        if len(coefficients) != len(encoding):
            raise ParseError(f"{len(coefficients)} coefficients for {len(encoding)} encoded columns")
        self.schema = schema
        self.intercept = float(intercept)
        self.coefficients = [float(c) for c in coefficients]
        self.link = link
        # (feature index, level or None) per encoded column
        self._columns: list[tuple[int, str | None]] = []
        for entry in encoding:
            if isinstance(entry, (tuple, list)):
                name, level = entry
            else:
                name, level = entry, None
            j = schema.index_of(str(name))
            d = schema.features[j]
            if level is None and not d.is_numeric:
                raise ParseError(f"feature {name!r}: categorical column needs a level")
            if level is not None:
                level = str(level)
                if level not in d.levels:
                    raise SchemaMismatch(f"feature {name!r}: unknown level {level!r}")
            self._columns.append((j, level))

    def linear_score(self, point: DataPoint) -> float:
        z = self.intercept
        for c, (j, level) in zip(self.coefficients, self._columns):
            if level is None:
                z += c * point[j]
            elif point[j] == level:
                z += c
        return z

    def predict_batch(self, batch: Sequence[DataPoint]) -> list[float]:
        scores = [self.linear_score(pt) for pt in batch]
        if self.link == "identity":
            return scores
        return [1.0 / (1.0 + math.exp(-z)) for z in scores]


class ExternalModel:
    """Adapter around a long-running child process.

    Wire protocol: the engine writes headerless CSV rows (schema feature
    order, period decimal separator) to the child's stdin and reads one
    prediction per row from its stdout, in order. Rows are exchanged in
    chunks so neither side can fill a pipe buffer while the other waits.
    The child must flush its output at least once per chunk of input.

    Access to the child is serialized with a lock; batches from multiple
    threads are processed one at a time.
    """

    CHUNK = 256

    def __init__(self, command: Sequence[str]):
        if not command:
            raise ParseError("external model needs a command")
        self.command = [str(c) for c in command]
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()
        self._probed = False

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise ExternalProcessFailure(f"cannot start {self.command!r}: {exc}") from exc
        return self._proc

    def _fail(self, msg: str):
        if self._proc is not None:
            self._proc.kill()
            self._proc = None
        raise ExternalProcessFailure(msg)

    @staticmethod
    def _format_row(point: DataPoint) -> str:
        cells = []
        for v in point:
            cells.append(repr(float(v)) if isinstance(v, (int, float)) else str(v))
        return ",".join(cells)

    def predict_batch(self, batch: Sequence[DataPoint]) -> list[float]:
        if not batch:
            return []
        with self._lock:
            proc = self._ensure_proc()
            preds: list[float] = []
            try:
                for start in range(0, len(batch), self.CHUNK):
                    chunk = batch[start : start + self.CHUNK]
                    proc.stdin.write("".join(self._format_row(pt) + "\n" for pt in chunk))
                    proc.stdin.flush()
                    for _ in chunk:
                        line = proc.stdout.readline()
                        if line == "":
                            self._fail(f"{self.command!r} exited early (code {proc.poll()})")
                        try:
                            preds.append(float(line.strip()))
                        except ValueError:
                            self._fail(f"{self.command!r} wrote a non-numeric prediction: {line!r}")
            except BrokenPipeError:
                self._fail(f"{self.command!r} closed its pipe")
            self._probed = True
            return preds

    def probe(self, point: DataPoint) -> float:
        """Round-trip one point; raises ExternalProcessFailure on any protocol error."""
        return self.predict_batch([point])[0]

    def close(self):
        with self._lock:
            if self._proc is not None:
                if self._proc.stdin:
                    try:
                        self._proc.stdin.close()
                    except OSError:
                        pass
                self._proc.wait(timeout=5)
                self._proc = None

    def __del__(self):  # best effort
        try:
            self.close()
        except Exception:
            pass


def load_model(model_path, schema: FeatureSchema) -> PredictionModel:
    """Instantiate a model from its JSON description.

    ``{"type": "linear", link, intercept, coefficients, encoding}`` or
    ``{"type": "external", command, args?}``. Relative command paths are
    resolved against the model file's directory.
    """
    model_path = Path(model_path)
    try:
        with open(model_path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file {model_path}: {exc}") from exc
    kind = obj.get("type")
    if kind == "linear":
        encoding = []
        for entry in obj.get("encoding", []):
            if isinstance(entry, dict):
                encoding.append((entry["feature"], entry.get("level")))
            else:
                encoding.append((entry, None))
        return LinearModel(
            schema,
            intercept=obj.get("intercept", 0.0),
            coefficients=obj.get("coefficients", []),
            encoding=encoding,
            link=obj.get("link", "identity"),
        )
    if kind == "external":
        command = obj.get("command")
        if isinstance(command, str):
            command = shlex.split(command)
        command = list(command or []) + [str(a) for a in obj.get("args", [])]
        # arguments naming files next to the model JSON are resolved to it
        resolved = []
        for part in command:
            cand = model_path.parent / part
            if not Path(part).is_absolute() and cand.exists():
                part = str(cand)
            resolved.append(part)
        return ExternalModel(resolved)
    raise ParseError(f"model file {model_path}: unknown type {kind!r}")


@dataclass(frozen=True)
class IceCurve:
    """Predictions along one feature's grid, everything else pinned to x*."""

    feature_index: int
    grid: tuple
    predictions: tuple[float, ...]
    sigma: float


def feature_grid(descriptor, observed_range, grid_size: int):
    if descriptor.is_numeric:
        lo, hi = observed_range
        return [float(v) for v in np.linspace(lo, hi, grid_size)]
    return list(descriptor.levels)


def ice_curve(
    model: PredictionModel,
    x_star: DataPoint,
    feature: int,
    observed: ObservedDataset,
    grid_size: int = 10,
) -> IceCurve:
    """Vary one feature over its observed range (numeric, ``grid_size``
    equidistant points) or all levels (categorical); sigma is the
    population standard deviation of the resulting predictions."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    d = observed.schema.features[feature]
    grid = feature_grid(d, observed.derived_ranges[feature], grid_size)
    batch = []
    for v in grid:
        pt = list(x_star)
        pt[feature] = v
        batch.append(tuple(pt))
    preds = predict_batch(model, batch)
    # exactly zero for constant curves so flat profiles stay detectable
    sigma = 0.0 if min(preds) == max(preds) else float(np.std(np.asarray(preds, dtype=float)))
    return IceCurve(feature, tuple(grid), tuple(preds), sigma)


def response_surface_grid(
    model: PredictionModel,
    x_star: DataPoint,
    feature_a: int,
    feature_b: int,
    observed: ObservedDataset,
    resolution: int,
) -> np.ndarray:
    """resolution x resolution prediction grid over two numeric features.

    Cell [i, j] holds the prediction with feature_a set to its i-th grid
    value and feature_b to its j-th, all other features at x*.
    """
    if feature_a == feature_b:
        raise ValueError("need two distinct features")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    schema = observed.schema
    for f in (feature_a, feature_b):
        if not schema.features[f].is_numeric:
            raise ValueError(f"feature {schema.features[f].name!r} is not numeric")
    grid_a = feature_grid(schema.features[feature_a], observed.derived_ranges[feature_a], resolution)
    grid_b = feature_grid(schema.features[feature_b], observed.derived_ranges[feature_b], resolution)
    batch = []
    for va in grid_a:
        for vb in grid_b:
            pt = list(x_star)
            pt[feature_a] = va
            pt[feature_b] = vb
            batch.append(tuple(pt))
    preds = predict_batch(model, batch)
    return np.asarray(preds, dtype=float).reshape(resolution, resolution)
