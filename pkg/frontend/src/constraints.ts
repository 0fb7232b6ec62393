// Constraint editor state: freezes, per-feature capping bounds, target
// range and run settings, turned into a job submission body.

import type { FeatureSummary, JobBody } from "./types.js";

export interface ConstraintState {
  freeze: string[];
  bounds: Record<string, [number, number]>;
  target: string;
  seed: number;
  generations: number;
  pop: number;
  limit: number;
  useIceInit: boolean;
  useConditionalMutator: boolean;
  epsilon: number | null;
}

export function defaultConstraints(): ConstraintState {
  return {
    freeze: [],
    bounds: {},
    target: "auto",
    seed: 0,
    generations: 175,
    pop: 20,
    limit: 10,
    useIceInit: true,
    useConditionalMutator: true,
    epsilon: null,
  };
}

/** Returns an error message, or null when the bounds are acceptable. */
export function validateBounds(feature: FeatureSummary, lower: number, upper: number): string | null {
  if (feature.kind !== "numerical" && feature.kind !== "integer") {
    return `${feature.name} is ${feature.kind}; bounds apply to numeric features only`;
  }
  if (!Number.isFinite(lower) || !Number.isFinite(upper)) {
    return "bounds must be numbers";
  }
  if (lower > upper) {
    return "lower bound exceeds upper bound";
  }
  const observed = feature.observed_range;
  if (observed && (lower < observed[0] || upper > observed[1])) {
    return `bounds must stay within the observed range [${observed[0]}, ${observed[1]}]`;
  }
  return null;
}

export function validateTarget(text: string): string | null {
  const s = text.trim();
  if (s.toLowerCase() === "auto") return null;
  const stripped = s.replace(/^[([]/, "").replace(/[)\]]$/, "");
  const parts = stripped.split(":");
  if (parts.length > 2) return "target must be 'a:b' or a single value";
  const numbers = parts.map((p) => Number(p));
  if (numbers.some((v) => !Number.isFinite(v))) return "target endpoints must be numbers";
  if (numbers.length === 2 && numbers[0] > numbers[1]) return "target lower bound exceeds upper bound";
  return null;
}

export function buildJobBody(dataset: string, row: number, state: ConstraintState): JobBody {
  const config: Record<string, unknown> = {
    seed: state.seed,
    generations: state.generations,
    mu: state.pop,
    use_ice_init: state.useIceInit,
    use_conditional_mutator: state.useConditionalMutator,
  };
  if (state.epsilon !== null) config.epsilon = state.epsilon;
  return {
    dataset,
    row,
    target: state.target,
    freeze: [...state.freeze],
    bounds: { ...state.bounds },
    config,
    limit: state.limit,
  };
}
