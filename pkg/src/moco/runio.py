"""Shared run execution: one entry point that loads inputs, runs the search
and persists a run directory (pareto.json / pareto.csv / archive.csv /
hv.csv / parcoords.csv, plus surface.json on request).

The CLI and the HTTP service both funnel through :func:`execute_explain`,
so a service job directory is byte-identical to what the command line
would have produced for the same parameters.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import (
    ArchiveEntry,
    EvolutionConfig,
    MocResult,
    entry_obj,
    run_moc,
    write_archive_csv,
    write_archive_json,
)
from .feature_space import FeatureSchema, ObservedDataset, SchemaMismatch, load_dataset
from .metrics import truncate_counterfactuals, write_hv_trace
from .model_adapter import load_model, predict_batch, response_surface_grid
from .objectives import DesiredOutcome, values_changed


def parse_target(text: str, prediction: float | None = None) -> DesiredOutcome:
    """Parse a target spec; ``auto`` flips to the opposite side of 0.5."""
    if text.strip().lower() == "auto":
        if prediction is None:
            raise ValueError("auto target needs the instance prediction")
        if prediction <= 0.5:
            return DesiredOutcome(0.5, 1.0, lower_open=True)
        return DesiredOutcome(0.0, 0.5)
    return DesiredOutcome.parse(text)


@dataclass
class ExplainRequest:
    data_path: str
    schema_path: str
    model_path: str
    target: str
    row: int | None = None
    point: dict | None = None
    pop: int = 20
    generations: int = 175
    seed: int = 0
    epsilon: float | None = None
    freeze: list[str] = field(default_factory=list)
    bounds: dict = field(default_factory=dict)
    use_ice_init: bool = True
    use_conditional_mutator: bool = True
    early_stop_patience: int | None = None
    k: int = 1
    limit: int = 10
    surface: tuple[str, str, int] | None = None

    def config(self) -> EvolutionConfig:
        cfg = EvolutionConfig(
            mu=self.pop,
            generations=self.generations,
            seed=self.seed,
            epsilon=self.epsilon,
            k=self.k,
            use_ice_init=self.use_ice_init,
            use_conditional_mutator=self.use_conditional_mutator,
            early_stop_patience=self.early_stop_patience,
        )
        cfg.validate()
        return cfg

    def metadata(self) -> dict:
        return {
            "version": __version__,
            "data": str(self.data_path),
            "schema": str(self.schema_path),
            "model": str(self.model_path),
            "row": self.row,
            "point": self.point,
            "target": self.target,
            "pop": self.pop,
            "generations": self.generations,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "freeze": list(self.freeze),
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "use_ice_init": self.use_ice_init,
            "use_conditional_mutator": self.use_conditional_mutator,
            "k": self.k,
            "limit": self.limit,
        }


def apply_constraints(schema: FeatureSchema, freeze, bounds) -> FeatureSchema:
    out = schema
    if freeze:
        out = out.with_frozen(freeze)
    if bounds:
        out = out.with_user_bounds({k: (float(v[0]), float(v[1])) for k, v in bounds.items()})
    return out


def feature_summaries(schema: FeatureSchema, observed: ObservedDataset) -> list[dict]:
    out = []
    for j, d in enumerate(schema.features):
        entry = {"name": d.name, "kind": d.kind, "actionable": d.actionable}
        if d.is_numeric:
            entry["range"] = list(d.range)
            entry["observed_range"] = list(observed.derived_ranges[j])
            if d.user_bounds is not None:
                entry["user_bounds"] = list(d.user_bounds)
        else:
            entry["levels"] = list(d.levels)
        out.append(entry)
    return out


def select_displayed(result: MocResult, limit: int) -> list[int]:
    """Positions of the counterfactuals shown by default (HV-greedy, capped)."""
    entries = result.counterfactuals
    return truncate_counterfactuals(
        [e.objectives for e in entries],
        [e.prediction for e in entries],
        result.target,
        limit,
        result.ref_point,
    )


def pareto_payload(result: MocResult, observed: ObservedDataset, request: ExplainRequest) -> dict:
    schema = observed.schema
    entries = result.counterfactuals
    selected = select_displayed(result, request.limit)
    return {
        "x_star": {
            "row": request.row,
            "values": dict(zip(schema.names, result.x_star)),
            "prediction": result.prediction_x_star,
        },
        "target": {
            "lower": result.target.lower,
            "upper": result.target.upper,
            "lower_open": result.target.lower_open,
            "upper_open": result.target.upper_open,
        },
        "ref_point": list(result.ref_point),
        "features": feature_summaries(schema, observed),
        "limit": request.limit,
        "counterfactuals": [entry_obj(entries[i], schema) for i in selected],
        "nondominated": [entry_obj(e, schema) for e in entries],
        "hv_trace": list(result.archive.hv_trace),
        "config": result.config.to_obj(),
    }


def _changed_names(entry: ArchiveEntry, x_star, schema: FeatureSchema) -> set[str]:
    return {
        d.name
        for j, d in enumerate(schema.features)
        if values_changed(entry.point[j], x_star[j], d)
    }


def build_surface_payload(
    model,
    x_star,
    observed: ObservedDataset,
    feature_a: str,
    feature_b: str,
    resolution: int,
    counterfactuals: list[ArchiveEntry] | None = None,
) -> dict:
    schema = observed.schema
    a = schema.index_of(feature_a)
    b = schema.index_of(feature_b)
    grid = response_surface_grid(model, x_star, a, b, observed, resolution)
    lo_a, hi_a = observed.derived_ranges[a]
    lo_b, hi_b = observed.derived_ranges[b]
    a_values = [float(v) for v in np.linspace(lo_a, hi_a, resolution)]
    b_values = [float(v) for v in np.linspace(lo_b, hi_b, resolution)]

    def histogram(j):
        lo, hi = observed.derived_ranges[j]
        col = np.array([r[j] for r in observed.rows], dtype=float)
        counts, edges = np.histogram(col, bins=20, range=(lo, hi) if hi > lo else (lo, lo + 1.0))
        return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}

    points = []
    if counterfactuals:
        for e in counterfactuals:
            if _changed_names(e, x_star, schema) <= {feature_a, feature_b}:
                points.append({"a": e.point[a], "b": e.point[b], "prediction": e.prediction})
    return {
        "feature_a": feature_a,
        "feature_b": feature_b,
        "a_values": a_values,
        "b_values": b_values,
        "grid": [[float(v) for v in row] for row in grid],
        "x_star": {"a": x_star[a], "b": x_star[b], "prediction": None},
        "histograms": {"a": histogram(a), "b": histogram(b)},
        "counterfactuals": points,
    }


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _write_pareto_csv(path, entries, schema):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation"] + schema.names + ["prediction", "o1", "o2", "o3", "o4"])
        for e in entries:
            w.writerow(
                [e.generation]
                + [repr(float(v)) if isinstance(v, float) else str(v) for v in e.point]
                + [
                    repr(float(e.prediction)),
                    repr(float(e.objectives[0])),
                    repr(float(e.objectives[1])),
                    str(int(e.objectives[2])),
                    repr(float(e.objectives[3])),
                ]
            )


def _write_parcoords_csv(path, payload, schema):
    """One row per displayed counterfactual (x* first), changed features only."""
    star = payload["x_star"]["values"]
    shown = payload["counterfactuals"]
    changed = [
        d.name
        for d in schema.features
        if any(
            values_changed(cf["values"][d.name], star[d.name], d)
            for cf in shown
        )
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "prediction"] + changed)
        w.writerow(["x_star", repr(float(payload["x_star"]["prediction"]))] + [str(star[n]) for n in changed])
        for i, cf in enumerate(shown):
            w.writerow(
                [f"cf_{i}", repr(float(cf["prediction"]))] + [str(cf["values"][n]) for n in changed]
            )


def execute_explain(request: ExplainRequest, out_dir) -> dict:
    """Run a full search and persist the run directory; returns the pareto payload."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    base = load_dataset(request.data_path, request.schema_path)
    schema = apply_constraints(base.schema, request.freeze, request.bounds)
    observed_all = ObservedDataset(schema, base.rows)

    if request.point is not None:
        missing = [n for n in schema.names if n not in request.point]
        if missing:
            raise SchemaMismatch(f"inline point is missing features: {missing}")
        x_star = schema.validate_point([request.point[n] for n in schema.names])
        observed = observed_all
    elif request.row is not None:
        if request.row < 0 or request.row >= len(observed_all):
            raise SchemaMismatch(f"row {request.row} out of range (dataset has {len(observed_all)} rows)")
        x_star = observed_all.rows[request.row]
        observed = observed_all.exclude_row(request.row)
    else:
        raise ValueError("need a row index or an inline point")

    model = load_model(request.model_path, schema)
    pred_star = predict_batch(model, [x_star])[0]
    target = parse_target(request.target, pred_star)
    config = request.config()

    result = run_moc(x_star, target, model, observed, config)

    payload = pareto_payload(result, observed, request)
    _write_json(out / "run.json", request.metadata())
    _write_json(out / "pareto.json", payload)
    _write_pareto_csv(out / "pareto.csv", result.counterfactuals, schema)
    write_archive_csv(result.archive, schema, out / "archive.csv")
    write_archive_json(result.archive, schema, out / "archive.json", request.metadata())
    write_hv_trace(out / "hv.csv", result.archive.hv_trace)
    _write_parcoords_csv(out / "parcoords.csv", payload, schema)

    if request.surface is not None:
        fa, fb, resolution = request.surface
        displayed = [result.counterfactuals[i] for i in select_displayed(result, request.limit)]
        surface = build_surface_payload(model, x_star, observed, fa, fb, int(resolution), displayed)
        surface["x_star"]["prediction"] = pred_star
        _write_json(out / "surface.json", surface)

    if hasattr(model, "close"):
        model.close()
    return payload
