/** Rectangle-brush gesture state machine for one scatter cell.
 *
 * Drag end emits a data-unit region; a click (zero-area drag) is a cursor,
 * which the view uses to highlight the nearest point instead of selecting.
 */

import { CellView, ScreenRect, cursorAt, fromRectangle } from "./region.js";
import type { AndDoc } from "./types.js";

export type BrushResult =
  | { kind: "rect"; region: AndDoc; rect: ScreenRect }
  | { kind: "cursor"; region: AndDoc; at: { x: number; y: number } };

export class BrushController {
  private start: { x: number; y: number } | null = null;
  private current: { x: number; y: number } | null = null;

  constructor(
    public cell: CellView,
    private clickTolerancePx = 1.0,
  ) {}

  get active(): boolean {
    return this.start !== null;
  }

  begin(sx: number, sy: number): void {
    this.start = { x: sx, y: sy };
    this.current = this.start;
  }

  move(sx: number, sy: number): ScreenRect | null {
    if (!this.start) return null;
    this.current = { x: sx, y: sy };
    return this.rect();
  }

  rect(): ScreenRect | null {
    if (!this.start || !this.current) return null;
    return {
      x0: this.start.x,
      y0: this.start.y,
      x1: this.current.x,
      y1: this.current.y,
    };
  }

  end(): BrushResult | null {
    const rect = this.rect();
    this.start = null;
    this.current = null;
    if (!rect) return null;
    const width = Math.abs(rect.x1 - rect.x0);
    const height = Math.abs(rect.y1 - rect.y0);
    if (width <= this.clickTolerancePx && height <= this.clickTolerancePx) {
      return {
        kind: "cursor",
        region: cursorAt(this.cell, rect.x0, rect.y0),
        at: { x: rect.x0, y: rect.y0 },
      };
    }
    return { kind: "rect", region: fromRectangle(this.cell, rect), rect };
  }

  cancel(): void {
    this.start = null;
    this.current = null;
  }
}

/** Nearest point to a cursor click, in screen space. */
export function nearestPoint(
  cell: CellView,
  points: { id: number; coords: Record<string, number> }[],
  sx: number,
  sy: number,
): number | null {
  let best: number | null = null;
  let bestDist = Infinity;
  for (const point of points) {
    const px = cell.x.toScreen(point.coords[cell.xVar]);
    const py = cell.y.toScreen(point.coords[cell.yVar]);
    const d = (px - sx) ** 2 + (py - sy) ** 2;
    if (d < bestDist) {
      bestDist = d;
      best = point.id;
    }
  }
  return best;
}
