/** Shared view state: what the user is looking at and what is selected.
 *
 * The selection is always a region document the service accepts verbatim;
 * linked highlighting is whatever row-id set the service returns for it,
 * never a client-side predicate re-evaluation.
 */

import { ApiClient } from "./api.js";
import { ALL, isAll } from "./region.js";
import type { RegionDoc } from "./types.js";

export class ViewState {
  projectId: string | null = null;
  activeGroup: string | null = null;
  selection: RegionDoc = ALL;
  highlightRow: number | null = null;
  colorBy: string | null = null;
  highlighted: Set<number> = new Set();

  private listeners: (() => void)[] = [];

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  async select(api: ApiClient, region: RegionDoc): Promise<void> {
    this.selection = region;
    if (this.projectId === null || isAll(region)) {
      this.highlighted = new Set();
    } else {
      this.highlighted = await api.filterIds(this.projectId, region);
    }
    this.emit();
  }

  /** Brush-then-clear: selection collapses to All and highlights vanish. */
  clearSelection(): void {
    this.selection = ALL;
    this.highlighted = new Set();
    this.highlightRow = null;
    this.emit();
  }

  setHighlightRow(rowId: number | null): void {
    this.highlightRow = rowId;
    this.emit();
  }

  setColorBy(column: string | null): void {
    this.colorBy = column;
    this.emit();
  }
}
