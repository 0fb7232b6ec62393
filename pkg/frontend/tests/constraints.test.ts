import { describe, expect, it } from "vitest";

import { buildJobBody, defaultConstraints, validateBounds, validateTarget } from "../src/constraints.js";
import type { FeatureSummary } from "../src/types.js";

const duration: FeatureSummary = {
  name: "duration",
  kind: "integer",
  actionable: true,
  range: [4, 80],
  observed_range: [6, 72],
};

const housing: FeatureSummary = {
  name: "housing",
  kind: "categorical",
  actionable: true,
  levels: ["own", "rent", "free"],
};

describe("validateBounds", () => {
  it("accepts bounds inside the observed range", () => {
    expect(validateBounds(duration, 12, 48)).toBeNull();
  });

  it("rejects bounds outside the observed range", () => {
    expect(validateBounds(duration, 2, 48)).toMatch(/observed range/);
    expect(validateBounds(duration, 12, 75)).toMatch(/observed range/);
  });

  it("rejects inverted bounds and categorical features", () => {
    expect(validateBounds(duration, 48, 12)).toMatch(/exceeds/);
    expect(validateBounds(housing, 0, 1)).toMatch(/numeric/);
  });
});

describe("validateTarget", () => {
  it("accepts auto, intervals and single values", () => {
    expect(validateTarget("auto")).toBeNull();
    expect(validateTarget("0.5:1")).toBeNull();
    expect(validateTarget("(0.5:1")).toBeNull();
    expect(validateTarget("0.75")).toBeNull();
  });

  it("rejects malformed input", () => {
    expect(validateTarget("1:0")).toMatch(/exceeds/);
    expect(validateTarget("a:b")).toMatch(/numbers/);
    expect(validateTarget("1:2:3")).toMatch(/single value/);
  });
});

describe("buildJobBody", () => {
  it("passes freezes, bounds and config through", () => {
    const state = defaultConstraints();
    state.freeze = ["age", "sex"];
    state.bounds = { duration: [12, 48] };
    state.seed = 9;
    state.generations = 25;
    const body = buildJobBody("credit", 0, state);
    expect(body).toMatchObject({
      dataset: "credit",
      row: 0,
      target: "auto",
      freeze: ["age", "sex"],
      bounds: { duration: [12, 48] },
      limit: 10,
    });
    expect(body.config).toMatchObject({ seed: 9, generations: 25, mu: 20 });
  });

  it("copies state so later edits do not leak into submitted bodies", () => {
    const state = defaultConstraints();
    state.freeze = ["age"];
    const body = buildJobBody("credit", 1, state);
    state.freeze.push("sex");
    expect(body.freeze).toEqual(["age"]);
  });
});
