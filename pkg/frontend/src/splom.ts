/** Scatter-plot-matrix scene computation: pure layout, no drawing.
 *
 * Every number here comes from the service's row documents; the client
 * derives geometry only.  One cell per ordered variable pair, axes shared
 * along each grid row and column, and diagonal cells summarize one variable:
 * histograms normally, compact range selectors once a group grows past
 * MAX_HISTOGRAM_DIMS dimensions (keeps screen space and update costs down).
 */

import { LinearScale, extent } from "./scales.js";
import type { CellView } from "./region.js";
import type { RowDoc } from "./types.js";

export const MAX_HISTOGRAM_DIMS = 8;
export const HISTOGRAM_BINS = 12;

export interface ScatterCell extends CellView {
  kind: "scatter";
  row: number;
  col: number;
  originX: number;
  originY: number;
  size: number;
}

export interface DiagonalCell {
  kind: "histogram" | "range_selector";
  row: number;
  col: number;
  variable: string;
  originX: number;
  originY: number;
  size: number;
  domain: [number, number];
  counts: number[]; // empty for range selectors
}

export type SplomCell = ScatterCell | DiagonalCell;

export interface SplomScene {
  variables: string[];
  skipped: string[]; // non-numeric members, reported not drawn
  cells: SplomCell[];
  cellSize: number;
  points: { id: number; coords: Record<string, number> }[];
}

function numericValues(rows: RowDoc[], name: string): number[] {
  const out: number[] = [];
  for (const row of rows) {
    const v = row.values[name];
    if (typeof v === "number" && Number.isFinite(v)) out.push(v);
  }
  return out;
}

export function computeSplom(
  group: string[],
  rows: RowDoc[],
  cellSize = 160,
  gap = 8,
): SplomScene {
  const variables: string[] = [];
  const skipped: string[] = [];
  const domains = new Map<string, [number, number]>();
  for (const name of group) {
    const values = numericValues(rows, name);
    if (values.length === 0 && rows.length > 0) {
      skipped.push(name);
      continue;
    }
    variables.push(name);
    domains.set(name, extent(values));
  }

  const diagonalKind =
    group.length > MAX_HISTOGRAM_DIMS ? "range_selector" : "histogram";
  const cells: SplomCell[] = [];
  for (let r = 0; r < variables.length; r++) {
    for (let c = 0; c < variables.length; c++) {
      const originX = c * (cellSize + gap);
      const originY = r * (cellSize + gap);
      if (r === c) {
        const variable = variables[r];
        const domain = domains.get(variable)!;
        cells.push({
          kind: diagonalKind,
          row: r,
          col: c,
          variable,
          originX,
          originY,
          size: cellSize,
          domain,
          counts:
            diagonalKind === "histogram"
              ? histogram(numericValues(rows, variable), domain, HISTOGRAM_BINS)
              : [],
        });
        continue;
      }
      const xVar = variables[c];
      const yVar = variables[r];
      const [xLo, xHi] = domains.get(xVar)!;
      const [yLo, yHi] = domains.get(yVar)!;
      cells.push({
        kind: "scatter",
        row: r,
        col: c,
        xVar,
        yVar,
        originX,
        originY,
        size: cellSize,
        // screen y grows downward; flipping the range keeps data y upward
        x: new LinearScale(xLo, xHi, originX, originX + cellSize),
        y: new LinearScale(yLo, yHi, originY + cellSize, originY),
      });
    }
  }

  const points = rows
    .filter((row) =>
      variables.every((name) => typeof row.values[name] === "number"),
    )
    .map((row) => {
      const coords: Record<string, number> = {};
      for (const name of variables) coords[name] = row.values[name] as number;
      return { id: row.id, coords };
    });

  return { variables, skipped, cells, cellSize, points };
}

export function histogram(
  values: number[],
  domain: [number, number],
  bins: number,
): number[] {
  const counts = new Array(bins).fill(0);
  const [lo, hi] = domain;
  const span = hi - lo;
  for (const v of values) {
    if (span === 0) {
      counts[0]++;
      continue;
    }
    const bin = Math.min(bins - 1, Math.floor(((v - lo) / span) * bins));
    if (bin >= 0) counts[bin]++;
  }
  return counts;
}

const LABEL_PALETTE = [
  "#4478c6",
  "#e2a93c",
  "#55a868",
  "#c44e52",
  "#8172b2",
  "#937860",
  "#da8bc3",
  "#8c8c8c",
];

export const UNLABELED_COLOR = "#c0c0c0";
export const HIGHLIGHT_COLOR = "#ffd500"; // drawn above any color-by layer

/** Categorical colors for labels; "unlabeled" stays grey. */
export function labelColor(label: string, order: string[]): string {
  if (label === "unlabeled") return UNLABELED_COLOR;
  const idx = order.indexOf(label);
  return LABEL_PALETTE[(idx < 0 ? order.length : idx) % LABEL_PALETTE.length];
}

/** Two-hue ramp for numeric color-by columns. */
export function numericColor(v: number, lo: number, hi: number): string {
  const t = hi === lo ? 0.5 : Math.min(1, Math.max(0, (v - lo) / (hi - lo)));
  const r = Math.round(40 + t * 200);
  const g = Math.round(80 + (1 - Math.abs(t - 0.5) * 2) * 120);
  const b = Math.round(220 - t * 180);
  return `rgb(${r},${g},${b})`;
}
