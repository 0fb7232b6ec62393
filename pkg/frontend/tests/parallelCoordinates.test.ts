import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  buildParallelCoords,
  changedFeatures,
  renderParallelCoords,
} from "../src/parallelCoordinates.js";
import type { ParetoPayload } from "../src/types.js";

const payload: ParetoPayload = JSON.parse(
  readFileSync(new URL("./fixtures/pareto.json", import.meta.url), "utf-8")
);

describe("changedFeatures", () => {
  it("keeps only features where some counterfactual differs from x*", () => {
    const changed = changedFeatures(payload);
    const star = payload.x_star.values;
    for (const name of changed) {
      expect(payload.counterfactuals.some((cf) => cf.values[name] !== star[name])).toBe(true);
    }
    for (const f of payload.features.map((f) => f.name)) {
      if (!changed.includes(f)) {
        expect(payload.counterfactuals.every((cf) => cf.values[f] === star[f])).toBe(true);
      }
    }
  });

  it("hides an axis whose values all equal x*", () => {
    const clone: ParetoPayload = structuredClone(payload);
    const name = changedFeatures(clone)[0];
    for (const cf of clone.counterfactuals) {
      cf.values[name] = clone.x_star.values[name];
    }
    expect(changedFeatures(clone)).not.toContain(name);
  });
});

describe("buildParallelCoords", () => {
  it("has one axis per changed feature and one polyline per counterfactual plus x*", () => {
    const model = buildParallelCoords(payload);
    expect(model.axes.map((a) => a.feature)).toEqual(changedFeatures(payload));
    expect(model.lines).toHaveLength(payload.counterfactuals.length + 1);
    expect(model.lines.at(-1)!.isStar).toBe(true);
  });

  it("axis labels carry the min and max of the counterfactual values", () => {
    const model = buildParallelCoords(payload);
    for (const axis of model.axes) {
      if (axis.levels) continue;
      const values = payload.counterfactuals.map((cf) => cf.values[axis.feature] as number);
      expect(axis.min).toBe(Math.min(...values));
      expect(axis.max).toBe(Math.max(...values));
    }
  });

  it("showAll reveals every feature", () => {
    const model = buildParallelCoords(payload, { showAll: true });
    expect(model.axes.map((a) => a.feature)).toEqual(payload.features.map((f) => f.name));
  });

  it("positions stay within [0, 1]", () => {
    const model = buildParallelCoords(payload, { showAll: true });
    for (const line of model.lines) {
      for (const p of line.points) {
        expect(p.position).toBeGreaterThanOrEqual(0);
        expect(p.position).toBeLessThanOrEqual(1);
      }
    }
  });

  it("reports an empty state when nothing attains the target", () => {
    const clone: ParetoPayload = structuredClone(payload);
    clone.target = { lower: 0.999, upper: 1.0, lower_open: false, upper_open: false };
    const model = buildParallelCoords(clone);
    expect(model.emptyMessage).toBeTruthy();
  });
});

describe("renderParallelCoords", () => {
  it("draws one polyline per line in the model", () => {
    const model = buildParallelCoords(payload);
    const svg = renderParallelCoords(model);
    const count = (svg.match(/<polyline/g) ?? []).length;
    expect(count).toBe(model.lines.length);
    expect(svg).toContain("pc-star");
  });

  it("renders the empty-state message instead of axes", () => {
    const clone: ParetoPayload = structuredClone(payload);
    clone.target = { lower: 0.999, upper: 1.0, lower_open: false, upper_open: false };
    const svg = renderParallelCoords(buildParallelCoords(clone));
    expect(svg).toContain("pc-empty");
    expect(svg).not.toContain("<polyline");
  });
});
