/** Per-point detail image panel.
 *
 * Clicking a computed point fetches the node's plot through the service;
 * pending or failed points show a disabled state without a request.  Rapid
 * clicks race: the newest click aborts the in-flight fetch, so the panel
 * always ends up showing the last point clicked.  A 404 becomes a
 * placeholder whose retry() re-issues the same request.
 */

import { ApiClient, ApiError } from "./api.js";
import type { RowDoc } from "./types.js";

export type DetailState =
  | { kind: "idle" }
  | { kind: "disabled"; rowId: number; reason: string }
  | { kind: "loading"; rowId: number; plot: string }
  | { kind: "loaded"; rowId: number; plot: string; png: Uint8Array }
  | { kind: "missing"; rowId: number; plot: string; status: number };

export class DetailPanel {
  state: DetailState = { kind: "idle" };
  private inFlight: AbortController | null = null;
  private listeners: ((state: DetailState) => void)[] = [];

  constructor(
    private api: ApiClient,
    private projectId: string,
  ) {}

  onChange(listener: (state: DetailState) => void): void {
    this.listeners.push(listener);
  }

  private setState(state: DetailState): void {
    this.state = state;
    for (const listener of this.listeners) listener(state);
  }

  async show(row: RowDoc, plot: string): Promise<void> {
    if (row.status !== "computed") {
      this.inFlight?.abort();
      this.inFlight = null;
      this.setState({
        kind: "disabled",
        rowId: row.id,
        reason: `row is ${row.status}`,
      });
      return;
    }
    this.inFlight?.abort(); // last click wins
    const controller = new AbortController();
    this.inFlight = controller;
    this.setState({ kind: "loading", rowId: row.id, plot });
    try {
      const png = await this.api.fetchDetail(
        this.projectId,
        row.id,
        plot,
        controller.signal,
      );
      if (controller.signal.aborted) return;
      this.setState({ kind: "loaded", rowId: row.id, plot, png });
    } catch (error) {
      if (controller.signal.aborted) return; // superseded by a newer click
      if (error instanceof ApiError) {
        this.setState({ kind: "missing", rowId: row.id, plot, status: error.status });
        return;
      }
      throw error;
    } finally {
      if (this.inFlight === controller) this.inFlight = null;
    }
  }

  /** Re-request the image behind a missing-placeholder. */
  async retry(row: RowDoc): Promise<void> {
    if (this.state.kind !== "missing") return;
    await this.show(row, this.state.plot);
  }
}
