// Heatmap + contour view of the model prediction over two features, with
// the explained instance, the counterfactuals that changed only the two
// plotted features, and the features' observed marginal histograms.

import type { SurfacePayload } from "./types.js";

export interface ContourLine {
  level: number;
  /** segments in grid coordinates: [ax0, bx0, ax1, bx1] with a along rows */
  segments: [number, number, number, number][];
}

export interface SurfaceModel {
  payload: SurfacePayload;
  vmin: number;
  vmax: number;
  contours: ContourLine[];
}

/**
 * Marching squares over grid[i][j] (i indexes a_values, j indexes b_values).
 * Returns line segments in fractional grid coordinates; linear
 * interpolation along the cell edges.
 */
export function marchingSquares(grid: number[][], level: number): [number, number, number, number][] {
  const segments: [number, number, number, number][] = [];
  const rows = grid.length;
  const cols = grid[0].length;
  const lerp = (v0: number, v1: number) => (level - v0) / (v1 - v0);
  for (let i = 0; i < rows - 1; i++) {
    for (let j = 0; j < cols - 1; j++) {
      const v00 = grid[i][j];
      const v10 = grid[i + 1][j];
      const v01 = grid[i][j + 1];
      const v11 = grid[i + 1][j + 1];
      let code = 0;
      if (v00 > level) code |= 1;
      if (v10 > level) code |= 2;
      if (v11 > level) code |= 4;
      if (v01 > level) code |= 8;
      if (code === 0 || code === 15) continue;
      // edge midpoints with interpolation: bottom (i..i+1, j), right
      // (i+1, j..j+1), top (i..i+1, j+1), left (i, j..j+1)
      const bottom: [number, number] = [i + lerp(v00, v10), j];
      const right: [number, number] = [i + 1, j + lerp(v10, v11)];
      const top: [number, number] = [i + lerp(v01, v11), j + 1];
      const left: [number, number] = [i, j + lerp(v00, v01)];
      const emit = (p: [number, number], q: [number, number]) =>
        segments.push([p[0], p[1], q[0], q[1]]);
      switch (code) {
        case 1: case 14: emit(left, bottom); break;
        case 2: case 13: emit(bottom, right); break;
        case 3: case 12: emit(left, right); break;
        case 4: case 11: emit(right, top); break;
        case 6: case 9: emit(bottom, top); break;
        case 7: case 8: emit(left, top); break;
        case 5:
        case 10: {
          const center = (v00 + v10 + v01 + v11) / 4;
          const flip = (center > level) === (code === 5);
          if (flip) {
            emit(left, bottom);
            emit(right, top);
          } else {
            emit(left, top);
            emit(bottom, right);
          }
          break;
        }
      }
    }
  }
  return segments;
}

export function contourLevels(vmin: number, vmax: number, count = 8): number[] {
  if (vmax <= vmin) return [];
  const levels: number[] = [];
  for (let k = 1; k <= count; k++) {
    levels.push(vmin + ((vmax - vmin) * k) / (count + 1));
  }
  return levels;
}

export function buildSurfaceModel(payload: SurfacePayload): SurfaceModel {
  const flat = payload.grid.flat();
  const vmin = Math.min(...flat);
  const vmax = Math.max(...flat);
  const contours = contourLevels(vmin, vmax).map((level) => ({
    level,
    segments: marchingSquares(payload.grid, level),
  }));
  return { payload, vmin, vmax, contours };
}

/** Two-stop color ramp (deep blue to warm red), presentation only. */
export function rampColor(t: number): string {
  const clamp = Math.min(1, Math.max(0, t));
  const r = Math.round(38 + clamp * (214 - 38));
  const g = Math.round(70 + clamp * (96 - 70));
  const b = Math.round(150 - clamp * (150 - 77));
  return `rgb(${r},${g},${b})`;
}

export function renderSurface(model: SurfaceModel, size = 430, histSize = 46): string {
  const { payload } = model;
  const aVals = payload.a_values;
  const bVals = payload.b_values;
  const n = aVals.length;
  const m = bVals.length;
  const padLeft = 64;
  const padBottom = 40;
  const plot = size;
  const width = padLeft + plot + 14;
  const height = histSize + 8 + plot + padBottom;
  const plotTop = histSize + 8;
  const aSpan = aVals[n - 1] - aVals[0] || 1;
  const bSpan = bVals[m - 1] - bVals[0] || 1;
  const xOf = (a: number) => padLeft + ((a - aVals[0]) / aSpan) * plot;
  const yOf = (b: number) => plotTop + plot - ((b - bVals[0]) / bSpan) * plot;
  const span = model.vmax - model.vmin || 1;

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="surface-plot">`,
  ];
  const cellW = plot / (n - 1 || 1);
  const cellH = plot / (m - 1 || 1);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < m; j++) {
      const color = rampColor((payload.grid[i][j] - model.vmin) / span);
      const x = padLeft + (i - 0.5) * cellW;
      const y = plotTop + plot - (j + 0.5) * cellH;
      parts.push(`<rect x="${x}" y="${y}" width="${cellW}" height="${cellH}" fill="${color}"/>`);
    }
  }
  for (const contour of model.contours) {
    for (const [a0, b0, a1, b1] of contour.segments) {
      const x1 = padLeft + (a0 / (n - 1)) * plot;
      const y1 = plotTop + plot - (b0 / (m - 1)) * plot;
      const x2 = padLeft + (a1 / (n - 1)) * plot;
      const y2 = plotTop + plot - (b1 / (m - 1)) * plot;
      parts.push(`<line x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}" class="surface-contour"/>`);
    }
  }
  // observed marginals: feature a above the plot, feature b to the right
  const histA = payload.histograms.a;
  const maxA = Math.max(...histA.counts, 1);
  for (let k = 0; k < histA.counts.length; k++) {
    const x0 = xOf(histA.edges[k]);
    const x1 = xOf(histA.edges[k + 1]);
    const h = (histA.counts[k] / maxA) * histSize;
    parts.push(`<rect x="${x0}" y="${histSize - h}" width="${Math.max(x1 - x0 - 1, 1)}" height="${h}" class="surface-hist"/>`);
  }
  const histB = payload.histograms.b;
  const maxB = Math.max(...histB.counts, 1);
  for (let k = 0; k < histB.counts.length; k++) {
    const y0 = yOf(histB.edges[k + 1]);
    const y1 = yOf(histB.edges[k]);
    const w = (histB.counts[k] / maxB) * 12;
    parts.push(`<rect x="${padLeft + plot + 2}" y="${y0}" width="${w}" height="${Math.max(y1 - y0 - 1, 1)}" class="surface-hist"/>`);
  }
  for (const cf of payload.counterfactuals) {
    parts.push(`<circle cx="${xOf(cf.a)}" cy="${yOf(cf.b)}" r="4" class="surface-cf"/>`);
  }
  const sx = xOf(payload.x_star.a);
  const sy = yOf(payload.x_star.b);
  parts.push(`<circle cx="${sx}" cy="${sy}" r="5" class="surface-star"/>`);
  parts.push(
    `<text x="${padLeft + plot / 2}" y="${height - 8}" text-anchor="middle" class="surface-label">${payload.feature_a}</text>`
  );
  parts.push(
    `<text x="16" y="${plotTop + plot / 2}" transform="rotate(-90 16 ${plotTop + plot / 2})" text-anchor="middle" class="surface-label">${payload.feature_b}</text>`
  );
  parts.push("</svg>");
  return parts.join("");
}
