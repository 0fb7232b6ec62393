"""Elitist multi-objective search over mixed feature spaces.

Candidates pair a gene vector with a per-feature "use original" mask:
wherever the mask is set the candidate expresses the explained instance's
value, which makes sparsity exactly controllable and resets exact.
Selection is nondominated sorting with a crowding distance summed over
objective space and feature space, optionally with threshold violators
demoted to trailing singleton fronts.

Reproducibility contract: one seeded generator drives the run, consumed in
a fixed order: population initialization (per candidate, per actionable
feature: one gate draw, then one value draw if sampled), then per
generation and per offspring pair: two binary tournaments (two index draws
each), recombination (one pair gate; per feature one gate draw plus one
spread draw for numeric genes; one mask-swap draw per feature), and
mutation of each child (one gate; value draws per feature; one mask-flip
draw per feature). Identical configs and seeds yield identical archives.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Sequence

import numpy as np

from .feature_space import (
    DataPoint,
    FeatureDescriptor,
    FeatureSchema,
    ObservedDataset,
    clamp_to_ranges,
    gower_delta,
)
from .metrics import FrontTracker, hypervolume
from .model_adapter import PredictionModel, ice_curve, predict_batch
from .objectives import DesiredOutcome, ObjectiveContext, ObjectiveVector, o1_target_distance
from .sampler import ConditionalSampler, fit_samplers

SBX_ETA = 20.0  # distribution index of the simulated binary crossover
GAUSS_SCALE = 0.1  # mutation step as a fraction of the feature's observed range
ICE_GRID_SIZE = 10


class ConfigInvalid(ValueError):
    pass


@dataclass
class EvolutionConfig:
    """Control parameters; the defaults are the tuned configuration."""

    mu: int = 20
    generations: int = 175
    p_rec: float = 0.57
    p_rec_gen: float = 0.85
    p_rec_use_orig: float = 0.88
    p_mut: float = 0.79
    p_mut_gen: float = 0.56
    p_mut_use_orig: float = 0.32
    p_min: float = 0.01
    p_max: float = 0.99
    epsilon: float | None = None
    k: int = 1
    use_ice_init: bool = True
    use_conditional_mutator: bool = True
    early_stop_patience: int | None = None
    seed: int = 0

    def validate(self):
        for name in ("p_rec", "p_rec_gen", "p_rec_use_orig", "p_mut", "p_mut_gen", "p_mut_use_orig", "p_min", "p_max"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigInvalid(f"{name}={v} outside [0, 1]")
        if self.p_min > self.p_max:
            raise ConfigInvalid(f"p_min={self.p_min} > p_max={self.p_max}")
        if self.mu < 2:
            raise ConfigInvalid(f"mu={self.mu} < 2")
        if self.generations < 0:
            raise ConfigInvalid("generations must be >= 0")
        if self.k < 1:
            raise ConfigInvalid("k must be >= 1")
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigInvalid("epsilon must be >= 0")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ConfigInvalid("early_stop_patience must be >= 1")

    @classmethod
    def from_obj(cls, obj: dict) -> "EvolutionConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**obj)
        cfg.validate()
        return cfg

    def to_obj(self) -> dict:
        return asdict(self)


@dataclass
class Candidate:
    genes: list
    use_original: list[bool]
    generation_born: int
    prediction: float | None = None
    objectives: ObjectiveVector | None = None
    rank: int = 0
    crowding: float = 0.0

    def effective(self, x_star: DataPoint) -> DataPoint:
        return tuple(x_star[j] if m else g for j, (g, m) in enumerate(zip(self.genes, self.use_original)))

    def copy_for(self, generation: int) -> "Candidate":
        return Candidate(list(self.genes), list(self.use_original), generation)


@dataclass
class ArchiveEntry:
    point: DataPoint
    prediction: float
    objectives: ObjectiveVector
    generation: int


class ParetoArchive:
    """Append-only record of every evaluated candidate plus an HV trace.

    The nondominated front is maintained incrementally so the hypervolume
    is only recomputed when an arrival actually changes the front. The
    trace is clamped non-decreasing to absorb floating-point jitter in
    re-summation (the underlying union volume cannot shrink).
    """

    def __init__(self, ref: Sequence[float]):
        self.ref = tuple(float(r) for r in ref)
        self.entries: list[ArchiveEntry] = []
        self.hv_trace: list[float] = []
        self._front = FrontTracker(dim=len(self.ref))

    def add_generation(self, entries: Sequence[ArchiveEntry]):
        changed = False
        for e in entries:
            idx = len(self.entries)
            self.entries.append(e)
            if self._front.add(idx, e.objectives):
                changed = True
        last = self.hv_trace[-1] if self.hv_trace else 0.0
        if changed or not self.hv_trace:
            hv = hypervolume(self._front.objectives(), self.ref)
            self.hv_trace.append(max(hv, last))
        else:
            self.hv_trace.append(last)

    def nondominated(self) -> list[int]:
        return sorted(self._front.indices)

    def counterfactual_set(self) -> list[ArchiveEntry]:
        """Nondominated entries, earliest duplicate of each point kept."""
        seen = set()
        out = []
        for i in self.nondominated():
            e = self.entries[i]
            if e.point in seen:
                continue
            seen.add(e.point)
            out.append(e)
        return out


@dataclass
class RunObserver:
    """Optional test hooks; silent unless a callback is set."""

    on_recombination: Callable | None = None  # (feature, y1, y2, c1, c2) before clamping
    on_conditional_sample: Callable | None = None  # (feature, sampled value)
    on_survival: Callable | None = None  # (pool candidates, survivor candidates)


def init_probabilities(sigmas: Sequence[float], p_min: float, p_max: float) -> np.ndarray:
    """Map per-feature ICE standard deviations linearly onto [p_min, p_max].

    A flat profile (all sigmas equal) maps every feature to the midpoint.
    """
    s = np.asarray(sigmas, dtype=float)
    if s.size == 0 or not np.all(np.isfinite(s)) or np.any(s < 0):
        raise ValueError("sigmas must be finite and >= 0")
    lo, hi = float(s.min()), float(s.max())
    if hi == lo:
        return np.full(s.size, (p_min + p_max) / 2.0)
    return (s - lo) * (p_max - p_min) / (hi - lo) + p_min


def _sample_value(d: FeatureDescriptor, obs_range, rng: np.random.Generator):
    if d.is_numeric:
        lo, hi = obs_range if obs_range is not None else d.range
        blo, bhi = d.effective_bounds()
        lo, hi = max(lo, blo), min(hi, bhi)
        if lo > hi:  # observed range disjoint from the capping bounds
            lo, hi = blo, bhi
        if d.kind == "integer":
            return float(rng.integers(math.ceil(lo), math.floor(hi) + 1))
        return float(rng.uniform(lo, hi))
    return d.levels[int(rng.integers(len(d.levels)))]


def initialize_population(
    x_star: DataPoint,
    config: EvolutionConfig,
    schema: FeatureSchema,
    observed: ObservedDataset,
    probabilities: Sequence[float],
    rng: np.random.Generator,
) -> list[Candidate]:
    """Seed mu candidates around x*.

    Feature j deviates (mask cleared, value drawn uniformly from its
    admissible set) with probability ``probabilities[j]``; non-actionable
    features are always masked.
    """
    population = []
    for _ in range(config.mu):
        genes = list(x_star)
        mask = [True] * schema.p
        for j, d in enumerate(schema.features):
            if not d.actionable:
                continue
            if rng.random() < probabilities[j]:
                mask[j] = False
                genes[j] = _sample_value(d, observed.derived_ranges[j], rng)
        population.append(Candidate(list(clamp_to_ranges(genes, schema)), mask, 0))
    return population


def _sbx_pair(y1: float, y2: float, u: float) -> tuple[float, float]:
    beta = (2.0 * u) ** (1.0 / (SBX_ETA + 1.0)) if u <= 0.5 else (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (SBX_ETA + 1.0))
    c1 = 0.5 * ((1.0 + beta) * y1 + (1.0 - beta) * y2)
    c2 = 0.5 * ((1.0 - beta) * y1 + (1.0 + beta) * y2)
    return c1, c2


def _finalize(genes: list, mask: list[bool], schema: FeatureSchema) -> tuple[list, list[bool]]:
    for j, d in enumerate(schema.features):
        if not d.actionable:
            mask[j] = True
    return list(clamp_to_ranges(genes, schema)), mask


def sbx_crossover(
    parent_a: Candidate,
    parent_b: Candidate,
    config: EvolutionConfig,
    schema: FeatureSchema,
    rng: np.random.Generator,
    generation: int = 0,
    observer: RunObserver | None = None,
) -> tuple[Candidate, Candidate]:
    """Recombine a parent pair: simulated binary crossover on numeric genes,
    uniform crossover on categorical genes and on the mask bits."""
    ga, gb = list(parent_a.genes), list(parent_b.genes)
    ma, mb = list(parent_a.use_original), list(parent_b.use_original)
    if rng.random() < config.p_rec:
        for j, d in enumerate(schema.features):
            if d.is_numeric:
                if rng.random() < config.p_rec_gen:
                    c1, c2 = _sbx_pair(ga[j], gb[j], rng.random())
                    if observer and observer.on_recombination:
                        observer.on_recombination(j, ga[j], gb[j], c1, c2)
                    ga[j], gb[j] = c1, c2
            else:
                if rng.random() < config.p_rec_gen * 0.5:
                    ga[j], gb[j] = gb[j], ga[j]
        for j in range(schema.p):
            if rng.random() < config.p_rec_use_orig:
                ma[j], mb[j] = mb[j], ma[j]
    ga, ma = _finalize(ga, ma, schema)
    gb, mb = _finalize(gb, mb, schema)
    return Candidate(ga, ma, generation), Candidate(gb, mb, generation)


def mutate(
    candidate: Candidate,
    config: EvolutionConfig,
    schema: FeatureSchema,
    ranges: Sequence[float],
    rng: np.random.Generator,
    sampler: ConditionalSampler | None = None,
    observer: RunObserver | None = None,
    x_star: DataPoint | None = None,
) -> Candidate:
    """Mutate genes, then flip mask bits, then clamp.

    Default operators: range-scaled Gaussian steps for numeric genes,
    uniform resampling among the other levels for categorical genes, a
    plain flip for binary ones. With a conditional sampler the genes are
    instead redrawn in randomized feature order from their conditional
    distribution given the values the candidate currently expresses
    (masked positions read as x*, since that is what gets evaluated).
    """
    genes = list(candidate.genes)
    mask = list(candidate.use_original)
    if rng.random() < config.p_mut:
        if config.use_conditional_mutator and sampler is not None:
            expressed = [
                x_star[i] if (mask[i] and x_star is not None) else genes[i] for i in range(schema.p)
            ]
            for j in rng.permutation(schema.p):
                j = int(j)
                if rng.random() < config.p_mut_gen:
                    context = expressed[:j] + expressed[j + 1 :]
                    value = sampler.sample(j, context, rng)
                    if observer and observer.on_conditional_sample:
                        observer.on_conditional_sample(j, value)
                    genes[j] = value
                    if not mask[j]:
                        expressed[j] = value
        else:
            for j, d in enumerate(schema.features):
                if rng.random() < config.p_mut_gen:
                    if d.is_numeric:
                        genes[j] = float(genes[j]) + rng.normal(0.0, GAUSS_SCALE * max(ranges[j], 0.0))
                    elif d.kind == "binary":
                        genes[j] = d.levels[1 - d.levels.index(genes[j])]
                    else:
                        others = [v for v in d.levels if v != genes[j]]
                        genes[j] = others[int(rng.integers(len(others)))]
        for j in range(schema.p):
            if rng.random() < config.p_mut_use_orig:
                mask[j] = not mask[j]
        genes, mask = _finalize(genes, mask, schema)
        return Candidate(genes, mask, candidate.generation_born)
    return candidate


def nondominated_sort(objectives: Sequence) -> list[list[int]]:
    """Deb-style fast nondominated sort; fronts hold ascending indices."""
    n = len(objectives)
    if n == 0:
        return []
    arr = np.asarray(objectives, dtype=float)
    le = (arr[:, None, :] <= arr[None, :, :]).all(axis=2)
    lt = (arr[:, None, :] < arr[None, :, :]).any(axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0).astype(int)
    fronts: list[list[int]] = []
    current = np.flatnonzero(counts == 0)
    while current.size:
        fronts.append([int(i) for i in current])
        counts[current] = -1
        counts -= dom[current].sum(axis=0)
        current = np.flatnonzero(counts == 0)
    return fronts


def penalize_violators(fronts: list[list[int]], objectives: Sequence, epsilon: float | None) -> list[list[int]]:
    """Move candidates with o1 > epsilon into trailing singleton fronts,
    ordered by ascending violation (ties by index)."""
    if epsilon is None:
        return [list(f) for f in fronts]
    violators = [i for front in fronts for i in front if objectives[i][0] > epsilon]
    kept = [[i for i in front if objectives[i][0] <= epsilon] for front in fronts]
    kept = [f for f in kept if f]
    violators.sort(key=lambda i: (objectives[i][0], i))
    return kept + [[i] for i in violators]


def crowding_distance_mixed(
    objectives: Sequence,
    points: Sequence[DataPoint],
    schema: FeatureSchema,
    ranges: Sequence[float],
) -> np.ndarray:
    """Crowding over objective space plus the analogous per-feature term.

    Per dimension (objective or feature), sorted-neighbor gaps are
    normalized by the front's span in that dimension; boundary candidates
    are infinite. Feature gaps use Gower deltas. Dimensions with zero span
    within the front contribute nothing. Both terms carry weight 1.
    """
    n = len(objectives)
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    arr = np.asarray(objectives, dtype=float)
    for m in range(arr.shape[1]):
        vals = arr[:, m]
        order = np.argsort(vals, kind="stable")
        span = vals[order[-1]] - vals[order[0]]
        if span <= 0:
            continue
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        for t in range(1, n - 1):
            i = order[t]
            if not np.isinf(dist[i]):
                dist[i] += (vals[order[t + 1]] - vals[order[t - 1]]) / span
    for j, d in enumerate(schema.features):
        if d.is_numeric:
            keys = np.array([float(pt[j]) for pt in points])
        else:
            keys = np.array([float(d.levels.index(pt[j])) for pt in points])
        order = np.argsort(keys, kind="stable")
        raw = [points[i][j] for i in order]
        span = gower_delta(raw[0], raw[-1], d, ranges[j])
        if span <= 0:
            continue
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        for t in range(1, n - 1):
            i = order[t]
            if not np.isinf(dist[i]):
                dist[i] += gower_delta(raw[t - 1], raw[t + 1], d, ranges[j]) / span
    return dist


def select_survivors(
    pool: list[Candidate],
    mu: int,
    epsilon: float | None,
    schema: FeatureSchema,
    ranges: Sequence[float],
    x_star: DataPoint,
) -> list[Candidate]:
    """NSGA-II environmental selection with penalization and mixed crowding.

    Fills by front; the splitting front is truncated by descending mixed
    crowding distance with ties broken toward lower pool index. Rank and
    crowding are stored on the surviving candidates for tournament use.
    """
    if len(pool) < mu:
        raise ValueError(f"pool of {len(pool)} cannot fill mu={mu}")
    objs = [c.objectives for c in pool]
    fronts = penalize_violators(nondominated_sort(objs), objs, epsilon)
    survivors: list[int] = []
    for rank, front in enumerate(fronts):
        pts = [pool[i].effective(x_star) for i in front]
        crowd = crowding_distance_mixed([objs[i] for i in front], pts, schema, ranges)
        for t, i in enumerate(front):
            pool[i].rank = rank
            pool[i].crowding = float(crowd[t])
        if len(survivors) + len(front) <= mu:
            survivors.extend(front)
        else:
            take = mu - len(survivors)
            order = sorted(range(len(front)), key=lambda t: (-crowd[t], front[t]))
            survivors.extend(front[t] for t in order[:take])
        if len(survivors) >= mu:
            break
    return [pool[i] for i in survivors]


def _tournament(population: list[Candidate], rng: np.random.Generator) -> Candidate:
    i, j = (int(v) for v in rng.integers(0, len(population), size=2))
    a, b = population[i], population[j]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return population[min(i, j)]


@dataclass
class MocResult:
    archive: ParetoArchive
    counterfactuals: list[ArchiveEntry]
    ref_point: tuple
    x_star: DataPoint
    prediction_x_star: float
    target: DesiredOutcome
    config: EvolutionConfig


def run_moc(
    x_star: Sequence,
    target: DesiredOutcome,
    model: PredictionModel,
    observed: ObservedDataset,
    config: EvolutionConfig,
    observer: RunObserver | None = None,
) -> MocResult:
    """Run the full search and return the archive plus the nondominated set.

    The first model call predicts x*, which doubles as the probe of
    external adapters before any search work happens.
    """
    config.validate()
    schema = observed.schema
    x_star = schema.validate_point(x_star)
    rng = np.random.default_rng(config.seed)
    ranges = observed.gower_ranges()

    pred_star = predict_batch(model, [x_star])[0]
    ref = (o1_target_distance(pred_star, target), 1.0, float(schema.p), 1.0)
    context = ObjectiveContext(model, x_star, target, observed, k=config.k)

    if config.use_ice_init:
        sigmas = [ice_curve(model, x_star, j, observed, ICE_GRID_SIZE).sigma for j in range(schema.p)]
        probabilities = init_probabilities(sigmas, config.p_min, config.p_max)
    else:
        probabilities = np.full(schema.p, 0.5)
    sampler = fit_samplers(observed) if config.use_conditional_mutator else None

    population = initialize_population(x_star, config, schema, observed, probabilities, rng)
    archive = ParetoArchive(ref)

    def evaluate(cands: list[Candidate], generation: int):
        points = [c.effective(x_star) for c in cands]
        preds, objs = context.evaluate_batch(points)
        for c, pr, ob in zip(cands, preds, objs):
            c.prediction = pr
            c.objectives = ob
        archive.add_generation(
            [ArchiveEntry(pt, pr, ob, generation) for pt, pr, ob in zip(points, preds, objs)]
        )

    evaluate(population, 0)
    population = select_survivors(population, config.mu, config.epsilon, schema, ranges, x_star)
    if observer and observer.on_survival:
        observer.on_survival(population, population)

    best_hv = archive.hv_trace[-1]
    stall = 0
    for gen in range(1, config.generations + 1):
        offspring: list[Candidate] = []
        while len(offspring) < config.mu:
            pa = _tournament(population, rng)
            pb = _tournament(population, rng)
            c1, c2 = sbx_crossover(pa, pb, config, schema, rng, gen, observer)
            c1 = mutate(c1, config, schema, ranges, rng, sampler, observer, x_star)
            c2 = mutate(c2, config, schema, ranges, rng, sampler, observer, x_star)
            offspring.extend((c1, c2))
        offspring = offspring[: config.mu]
        evaluate(offspring, gen)
        pool = population + offspring
        population = select_survivors(pool, config.mu, config.epsilon, schema, ranges, x_star)
        if observer and observer.on_survival:
            observer.on_survival(pool, population)
        if config.early_stop_patience is not None:
            if archive.hv_trace[-1] > best_hv:
                best_hv = archive.hv_trace[-1]
                stall = 0
            else:
                stall += 1
                if stall >= config.early_stop_patience:
                    break

    return MocResult(
        archive=archive,
        counterfactuals=archive.counterfactual_set(),
        ref_point=ref,
        x_star=x_star,
        prediction_x_star=pred_star,
        target=target,
        config=config,
    )


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, (int, float)) else str(value)


def write_archive_csv(archive: ParetoArchive, schema: FeatureSchema, path):
    """One row per evaluated candidate: generation, features, prediction, objectives."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation"] + schema.names + ["prediction", "o1", "o2", "o3", "o4"])
        for e in archive.entries:
            row = [e.generation] + [_fmt(v) for v in e.point] + [
                repr(float(e.prediction)),
                repr(float(e.objectives[0])),
                repr(float(e.objectives[1])),
                str(int(e.objectives[2])),
                repr(float(e.objectives[3])),
            ]
            w.writerow(row)


def entry_obj(entry: ArchiveEntry, schema: FeatureSchema) -> dict:
    return {
        "generation": entry.generation,
        "values": {n: v for n, v in zip(schema.names, entry.point)},
        "prediction": entry.prediction,
        "objectives": {
            "o1": entry.objectives[0],
            "o2": entry.objectives[1],
            "o3": int(entry.objectives[2]),
            "o4": entry.objectives[3],
        },
    }


def write_archive_json(archive: ParetoArchive, schema: FeatureSchema, path, metadata: dict):
    obj = {
        "metadata": metadata,
        "ref_point": list(archive.ref),
        "hv_trace": list(archive.hv_trace),
        "entries": [entry_obj(e, schema) for e in archive.entries],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
