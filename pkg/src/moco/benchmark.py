"""Benchmark harness: search variants and random search at equal budgets.

A manifest (JSON) lists instances as (dataset, model, rows) plus shared
settings. Per instance and method the harness records the cumulative
hypervolume trace, nondominated counts and objective summaries; per
generation the methods are ranked by hypervolume (mid-ranks on ties,
higher is better) and averaged over instances. Externally produced
counterfactual files can be attached per instance to compute coverage
rates against the tuned variant.
"""

from __future__ import annotations

import csv
import json
import statistics
from pathlib import Path
from typing import Callable

from scipy.stats import rankdata

from .baselines import random_search
from .evolution import EvolutionConfig, run_moc
from .feature_space import load_dataset
from .metrics import coverage_rate, nondominated_indices, truncate_counterfactuals
from .model_adapter import load_model, predict_batch
from .objectives import ObjectiveContext, o1_target_distance
from .runio import parse_target

METHODS = ("mocmod", "mocice", "moccond", "moc", "random")

#: (use_ice_init, use_conditional_mutator) per search variant
VARIANTS = {
    "mocmod": (True, True),
    "mocice": (True, False),
    "moccond": (False, True),
    "moc": (False, False),
}


class ManifestError(ValueError):
    pass


def load_manifest(path) -> dict:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    instances = obj.get("instances") or []
    if not instances:
        raise ManifestError("manifest lists no instances")
    for inst in instances:
        for key in ("data", "schema", "model"):
            if key not in inst:
                raise ManifestError(f"instance missing {key!r}: {inst}")
            inst[key] = str(path.parent / inst[key])
        if not inst.get("rows"):
            raise ManifestError(f"instance lists no rows: {inst['data']}")
        if "external" in inst:
            inst["external"] = {name: str(path.parent / p) for name, p in inst["external"].items()}
    methods = obj.get("methods", list(METHODS))
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ManifestError(f"unknown methods: {sorted(unknown)}")
    obj["methods"] = methods
    obj["instances"] = instances
    obj.setdefault("pop", 20)
    obj.setdefault("generations", 175)
    obj.setdefault("seed", 0)
    obj.setdefault("limit", 10)
    obj.setdefault("epsilon", None)
    obj.setdefault("k", 1)
    return obj


def _median_objectives(entries) -> dict:
    if not entries:
        return {"o1": None, "o2": None, "o3": None, "o4": None}
    return {
        f"o{m + 1}": statistics.median(float(e.objectives[m]) for e in entries)
        for m in range(4)
    }


def _load_external_points(path, schema):
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != schema.names:
            raise ManifestError(f"{path}: header does not match schema features")
        for cells in reader:
            if not cells:
                continue
            values = [
                float(c) if schema.features[j].is_numeric else c.strip()
                for j, c in enumerate(cells)
            ]
            rows.append(schema.validate_point(values))
    return rows


def run_benchmark(manifest: dict, out_dir, progress: Callable[[str], None] | None = None) -> dict:
    """Execute every (instance, method) pair and write the report files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    say = progress or (lambda msg: None)

    methods = manifest["methods"]
    pop = manifest["pop"]
    generations = manifest["generations"]
    limit = manifest["limit"]

    results = []
    instance_idx = 0
    for inst in manifest["instances"]:
        dataset = load_dataset(inst["data"], inst["schema"])
        model = load_model(inst["model"], dataset.schema)
        for row in inst["rows"]:
            x_star = dataset.rows[row]
            observed = dataset.exclude_row(row)
            pred_star = predict_batch(model, [x_star])[0]
            target = parse_target(inst.get("target", "auto"), pred_star)
            seed = manifest["seed"] + 17 * instance_idx
            record = {
                "dataset": Path(inst["data"]).stem,
                "model": Path(inst["model"]).stem,
                "row": row,
                "prediction": pred_star,
                "target": target.describe(),
                "hv": {},
                "hv_gen0": {},
                "counts": {},
                "objective_medians": {},
                "coverage": {},
            }
            mocmod_attaining = None
            context = ObjectiveContext(model, x_star, target, observed, k=manifest["k"])
            for method in methods:
                if method == "random":
                    archive = random_search(
                        x_star, target, model, observed, pop, generations + 1, seed=seed, k=manifest["k"]
                    )
                    entries = [archive.entries[i] for i in archive.nondominated()]
                    trace = archive.hv_trace
                else:
                    ice, cond = VARIANTS[method]
                    cfg = EvolutionConfig(
                        mu=pop,
                        generations=generations,
                        seed=seed,
                        epsilon=manifest["epsilon"],
                        k=manifest["k"],
                        use_ice_init=ice,
                        use_conditional_mutator=cond,
                    )
                    res = run_moc(x_star, target, model, observed, cfg)
                    entries = res.counterfactuals
                    trace = res.archive.hv_trace
                attaining = [e for e in entries if target.contains(e.prediction)]
                record["hv"][method] = list(trace)
                record["hv_gen0"][method] = trace[0]
                record["counts"][method] = {"nondominated": len(entries), "attaining": len(attaining)}
                record["objective_medians"][method] = _median_objectives(entries)
                if method == "mocmod":
                    ref = (o1_target_distance(pred_star, target), 1.0, float(dataset.schema.p), 1.0)
                    keep = truncate_counterfactuals(
                        [e.objectives for e in attaining],
                        [e.prediction for e in attaining],
                        target,
                        limit,
                        ref,
                    ) if attaining else []
                    mocmod_attaining = [attaining[i].objectives for i in keep]
                say(f"{record['dataset']} row {row} {method}: hv={trace[-1]:.4f}")
            for name, path in (inst.get("external") or {}).items():
                points = _load_external_points(path, dataset.schema)
                preds, objs = context.evaluate_batch(points)
                theirs = [o for o, pr in zip(objs, preds) if target.contains(pr)]
                if theirs:
                    theirs = [theirs[i] for i in nondominated_indices(theirs)]
                record["coverage"][name] = (
                    coverage_rate(mocmod_attaining or [], theirs) if theirs else None
                )
            results.append(record)
            instance_idx += 1
        if hasattr(model, "close"):
            model.close()

    summary = _summarize(results, methods, generations)
    _write_reports(out, results, summary, methods, generations)
    return summary


def _summarize(results, methods, generations) -> dict:
    n_gen = generations + 1
    mean_ranks = {m: [0.0] * n_gen for m in methods}
    for rec in results:
        for g in range(n_gen):
            ranks = rankdata([rec["hv"][m][g] for m in methods])  # mid-ranks; higher hv, higher rank
            for m, r in zip(methods, ranks):
                mean_ranks[m][g] += r / len(results)
    return {
        "methods": list(methods),
        "generations": generations,
        "instances": results,
        "mean_ranks": mean_ranks,
        "mean_final_rank": {m: mean_ranks[m][-1] for m in methods},
    }


def _write_reports(out: Path, results, summary, methods, generations):
    with open(out / "ranks.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "generation", "mean_rank"])
        for m in methods:
            for g, r in enumerate(summary["mean_ranks"][m]):
                w.writerow([m, g, repr(r)])

    with open(out / "hv_final.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "model", "row", "method", "hv_gen0", "hv_final"])
        for rec in results:
            for m in methods:
                w.writerow(
                    [rec["dataset"], rec["model"], rec["row"], m, repr(rec["hv_gen0"][m]), repr(rec["hv"][m][-1])]
                )

    with open(out / "counts.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "row", "method", "nondominated", "attaining"])
        for rec in results:
            for m in methods:
                c = rec["counts"][m]
                w.writerow([rec["dataset"], rec["row"], m, c["nondominated"], c["attaining"]])

    with open(out / "objectives_summary.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "row", "method", "median_o1", "median_o2", "median_o3", "median_o4"])
        for rec in results:
            for m in methods:
                med = rec["objective_medians"][m]
                w.writerow(
                    [rec["dataset"], rec["row"], m]
                    + [repr(med[f"o{i}"]) if med[f"o{i}"] is not None else "" for i in range(1, 5)]
                )

    rows = [
        (rec["dataset"], rec["row"], name, rate)
        for rec in results
        for name, rate in rec["coverage"].items()
    ]
    if rows:
        with open(out / "coverage.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dataset", "row", "method", "coverage"])
            for dataset, row, name, rate in rows:
                w.writerow([dataset, row, name, repr(rate) if rate is not None else ""])

    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "methods": summary["methods"],
                "generations": summary["generations"],
                "mean_final_rank": summary["mean_final_rank"],
            },
            fh,
            indent=2,
        )
        fh.write("\n")
