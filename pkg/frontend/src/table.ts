// Objective-space table of the displayed counterfactual set.

import type { ParetoPayload } from "./types.js";

export interface TableRow {
  index: number;
  label: string;
  prediction: number;
  o1: number;
  o2: number;
  o3: number;
  o4: number;
  generation: number;
}

export type SortColumn = "prediction" | "o1" | "o2" | "o3" | "o4" | "generation";

export function buildObjectiveTable(payload: ParetoPayload): TableRow[] {
  return payload.counterfactuals.map((cf, i) => ({
    index: i,
    label: `cf ${i + 1}`,
    prediction: cf.prediction,
    o1: cf.objectives.o1,
    o2: cf.objectives.o2,
    o3: cf.objectives.o3,
    o4: cf.objectives.o4,
    generation: cf.generation,
  }));
}

/** Stable sort by one column; equal keys keep their current order. */
export function sortRows(rows: TableRow[], column: SortColumn, ascending = true): TableRow[] {
  const out = [...rows];
  out.sort((a, b) => (ascending ? a[column] - b[column] : b[column] - a[column]));
  return out;
}
