// Parallel-coordinates view of a counterfactual set. One axis per changed
// feature (unchanged features stay hidden unless showAll is set), one
// polyline per counterfactual, the explained instance overlaid. Axis
// labels carry the min and max of the counterfactual values on that axis.

import type { Counterfactual, FeatureValue, ParetoPayload } from "./types.js";
import { targetContains } from "./types.js";

export interface Axis {
  feature: string;
  kind: string;
  /** numeric axes: extremes of the displayed counterfactual values */
  min?: number;
  max?: number;
  /** categorical axes: levels present among displayed values, schema order */
  levels?: string[];
}

export interface Polyline {
  label: string;
  isStar: boolean;
  prediction: number;
  objectives?: { o1: number; o2: number; o3: number; o4: number };
  /** per axis: raw value and a [0, 1] position along the axis */
  points: { value: FeatureValue; position: number }[];
}

export interface ParallelCoordsModel {
  axes: Axis[];
  lines: Polyline[];
  emptyMessage?: string;
}

export function valuesDiffer(a: FeatureValue, b: FeatureValue): boolean {
  return a !== b;
}

export function changedFeatures(payload: ParetoPayload): string[] {
  const star = payload.x_star.values;
  return payload.features
    .map((f) => f.name)
    .filter((name) => payload.counterfactuals.some((cf) => valuesDiffer(cf.values[name], star[name])));
}

function axisFor(payload: ParetoPayload, name: string): Axis {
  const feature = payload.features.find((f) => f.name === name)!;
  if (feature.kind === "numerical" || feature.kind === "integer") {
    const values = payload.counterfactuals.map((cf) => cf.values[name] as number);
    if (values.length === 0) values.push(payload.x_star.values[name] as number);
    return { feature: name, kind: feature.kind, min: Math.min(...values), max: Math.max(...values) };
  }
  const present = new Set<string>(payload.counterfactuals.map((cf) => String(cf.values[name])));
  present.add(String(payload.x_star.values[name]));
  const levels = (feature.levels ?? []).filter((lvl) => present.has(lvl));
  return { feature: name, kind: feature.kind, levels };
}

function positionOn(axis: Axis, value: FeatureValue): number {
  if (axis.levels) {
    if (axis.levels.length <= 1) return 0.5;
    const idx = Math.max(0, axis.levels.indexOf(String(value)));
    return idx / (axis.levels.length - 1);
  }
  const lo = axis.min ?? 0;
  const hi = axis.max ?? 1;
  if (hi <= lo) return 0.5;
  const t = ((value as number) - lo) / (hi - lo);
  return Math.min(1, Math.max(0, t));
}

function lineFor(axes: Axis[], values: Record<string, FeatureValue>): { value: FeatureValue; position: number }[] {
  return axes.map((axis) => ({ value: values[axis.feature], position: positionOn(axis, values[axis.feature]) }));
}

export function buildParallelCoords(payload: ParetoPayload, opts: { showAll?: boolean } = {}): ParallelCoordsModel {
  const names = opts.showAll ? payload.features.map((f) => f.name) : changedFeatures(payload);
  const axes = names.map((n) => axisFor(payload, n));
  const lines: Polyline[] = payload.counterfactuals.map((cf: Counterfactual, i) => ({
    label: `cf ${i + 1}`,
    isStar: false,
    prediction: cf.prediction,
    objectives: cf.objectives,
    points: lineFor(axes, cf.values),
  }));
  lines.push({
    label: "x*",
    isStar: true,
    prediction: payload.x_star.prediction,
    points: lineFor(axes, payload.x_star.values),
  });
  const model: ParallelCoordsModel = { axes, lines };
  const anyAttaining = payload.counterfactuals.some((cf) => targetContains(payload.target, cf.prediction));
  if (!anyAttaining) {
    model.emptyMessage = "No counterfactual reaches the desired outcome; relax the target or the constraints.";
  }
  return model;
}

const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

export function fmt(v: FeatureValue): string {
  if (typeof v === "number" && Number.isFinite(v) && !Number.isInteger(v)) {
    return String(Math.round(v * 1000) / 1000);
  }
  return String(v);
}

export function renderParallelCoords(model: ParallelCoordsModel, width = 760, height = 380): string {
  const padX = 70;
  const padTop = 36;
  const padBottom = 24;
  const n = model.axes.length;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="pc-plot">`,
  ];
  if (model.emptyMessage || n === 0) {
    const message = model.emptyMessage ?? "Nothing to plot: every displayed feature is unchanged.";
    parts.push(`<text x="${width / 2}" y="${height / 2}" text-anchor="middle" class="pc-empty">${esc(message)}</text>`);
    parts.push("</svg>");
    return parts.join("");
  }
  const axisX = (i: number) => (n === 1 ? width / 2 : padX + (i * (width - 2 * padX)) / (n - 1));
  const axisY = (t: number) => height - padBottom - t * (height - padTop - padBottom);
  for (const [i, axis] of model.axes.entries()) {
    const x = axisX(i);
    parts.push(`<line x1="${x}" y1="${axisY(0)}" x2="${x}" y2="${axisY(1)}" class="pc-axis"/>`);
    parts.push(`<text x="${x}" y="${padTop - 18}" text-anchor="middle" class="pc-axis-name">${esc(axis.feature)}</text>`);
    if (axis.levels) {
      for (const [k, lvl] of axis.levels.entries()) {
        const t = axis.levels.length <= 1 ? 0.5 : k / (axis.levels.length - 1);
        parts.push(`<text x="${x + 6}" y="${axisY(t)}" class="pc-tick">${esc(lvl)}</text>`);
      }
    } else {
      parts.push(`<text x="${x + 6}" y="${axisY(0)}" class="pc-tick">${esc(fmt(axis.min ?? 0))}</text>`);
      parts.push(`<text x="${x + 6}" y="${axisY(1)}" class="pc-tick">${esc(fmt(axis.max ?? 1))}</text>`);
    }
  }
  for (const [idx, line] of model.lines.entries()) {
    const pts = line.points.map((p, i) => `${axisX(i)},${axisY(p.position)}`).join(" ");
    const cls = line.isStar ? "pc-line pc-star" : "pc-line";
    parts.push(`<polyline points="${pts}" class="${cls}" data-index="${idx}" fill="none"/>`);
  }
  parts.push("</svg>");
  return parts.join("");
}
