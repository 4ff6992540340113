/** Converting screen gestures into region documents.
 *
 * Regions are always expressed in data units; the only place screen
 * coordinates appear is right here, where a cell's scales translate them.
 * The emitted documents are exactly what the service's region parser
 * accepts, so a brushed selection can be posted back verbatim.
 */

import { LinearScale } from "./scales.js";
import type { AllDoc, AndDoc, RegionDoc } from "./types.js";

export interface CellView {
  xVar: string;
  yVar: string;
  x: LinearScale;
  y: LinearScale;
}

export interface ScreenRect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/** Data-unit interval pair for a brushed rectangle; zero-area collapses to a
 * cursor (two point intervals). */
export function fromRectangle(cell: CellView, rect: ScreenRect): AndDoc {
  const dx0 = cell.x.toData(rect.x0);
  const dx1 = cell.x.toData(rect.x1);
  const dy0 = cell.y.toData(rect.y0);
  const dy1 = cell.y.toData(rect.y1);
  return {
    type: "and",
    children: [
      { type: "interval", var: cell.xVar, lo: Math.min(dx0, dx1), hi: Math.max(dx0, dx1) },
      { type: "interval", var: cell.yVar, lo: Math.min(dy0, dy1), hi: Math.max(dy0, dy1) },
    ],
  };
}

export function cursorAt(cell: CellView, sx: number, sy: number): AndDoc {
  return fromRectangle(cell, { x0: sx, y0: sy, x1: sx, y1: sy });
}

export const ALL: AllDoc = { type: "all" };

export function isAll(region: RegionDoc): boolean {
  return region.type === "all";
}

/** Region documents travel as a JSON query parameter on GET /rows. */
export function regionParam(region: RegionDoc): string {
  return JSON.stringify(region);
}
