// Payload shapes of the backing JSON API. The UI renders these verbatim;
// every displayed number must trace back to one of these fields.

export type FeatureValue = number | string;

export interface FeatureSummary {
  name: string;
  kind: "numerical" | "integer" | "categorical" | "binary";
  actionable: boolean;
  range?: [number, number];
  observed_range?: [number, number];
  user_bounds?: [number, number];
  levels?: string[];
}

export interface ObjectiveValues {
  o1: number;
  o2: number;
  o3: number;
  o4: number;
}

export interface Counterfactual {
  generation: number;
  values: Record<string, FeatureValue>;
  prediction: number;
  objectives: ObjectiveValues;
}

export interface TargetRange {
  lower: number;
  upper: number;
  lower_open: boolean;
  upper_open: boolean;
}

export interface ParetoPayload {
  x_star: { row: number | null; values: Record<string, FeatureValue>; prediction: number };
  target: TargetRange;
  ref_point: number[];
  features: FeatureSummary[];
  limit: number;
  counterfactuals: Counterfactual[];
  nondominated: Counterfactual[];
  hv_trace: number[];
  config: Record<string, unknown>;
}

export interface Histogram {
  edges: number[];
  counts: number[];
}

export interface SurfacePayload {
  feature_a: string;
  feature_b: string;
  a_values: number[];
  b_values: number[];
  grid: number[][];
  x_star: { a: number; b: number; prediction: number | null };
  histograms: { a: Histogram; b: Histogram };
  counterfactuals: { a: number; b: number; prediction: number }[];
}

export interface DatasetInfo {
  id: string;
  rows: number;
  features: FeatureSummary[];
}

export interface RowInfo {
  row: number;
  values: Record<string, FeatureValue>;
  prediction: number;
}

export interface JobState {
  job: string;
  state: "queued" | "running" | "done" | "failed";
  error?: string;
}

export interface JobBody {
  dataset: string;
  row: number;
  target: string;
  freeze: string[];
  bounds: Record<string, [number, number]>;
  config: Record<string, unknown>;
  limit: number;
}

export function targetContains(target: TargetRange, prediction: number): boolean {
  const loOk = target.lower_open ? prediction > target.lower : prediction >= target.lower;
  const hiOk = target.upper_open ? prediction < target.upper : prediction <= target.upper;
  return loOk && hiOk;
}

export function describeTarget(target: TargetRange): string {
  if (target.lower === target.upper) return String(target.lower);
  const lo = target.lower_open ? "(" : "[";
  const hi = target.upper_open ? ")" : "]";
  return `${lo}${target.lower}, ${target.upper}${hi}`;
}
