/**
 * End-to-end acceptance for the browser companion, against the real service:
 *  - brush fidelity: a scripted rectangle in the embedding view produces a
 *    region whose service-side filter equals the visually enclosed points of
 *    a fixed 50-point fixture;
 *  - detail loop: a computed point's PNG is fetched and held for rendering,
 *    a pending point is disabled.
 * Requires the Python package on PATH (`python3 -m paraspace.cli`).
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { DetailPanel } from "../src/detail.js";
import { fromRectangle } from "../src/region.js";
import { LinearScale } from "../src/scales.js";
import type { CellView } from "../src/region.js";
import type { RowDoc } from "../src/types.js";

const PORT = 8750 + (process.pid % 180);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
const api = new ApiClient(BASE, (input, init) => fetch(input, init));

async function waitForService(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const doc = await api.health();
      if (doc.status === "ok") return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}

beforeAll(async () => {
  const home = mkdtempSync(join(tmpdir(), "paraspace-ui-"));
  server = spawn(
    "python3",
    ["-m", "paraspace.cli", "serve", "--home", home, "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForService();
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe("brush fidelity against the service", () => {
  it(
    "rectangle over the embedding view filters to exactly the enclosed points",
    async () => {
      // Fixed 50-point fixture: a 10x5 grid materialized by the service.
      // The embedding view is just another pair of table columns.
      const project = await api.createProject({
        name: "brush-fixture",
        variables: [
          { name: "embed_x", role: "factor", default: 0 },
          { name: "embed_y", role: "factor", default: 0 },
        ],
      });
      const job = await api.sample(project.id, {
        region: {
          type: "and",
          children: [
            { type: "interval", var: "embed_x", lo: 0, hi: 9 },
            { type: "interval", var: "embed_y", lo: 0, hi: 4 },
          ],
        },
        method: "grid",
        levels: { embed_x: 10, embed_y: 5 },
      });
      await api.pollJob(job.id, 50);
      const rows = await api.getRows(project.id);
      expect(rows).toHaveLength(50);

      // One 300x300 screen cell over the embedding columns, y flipped.
      const cell: CellView = {
        xVar: "embed_x",
        yVar: "embed_y",
        x: new LinearScale(0, 9, 0, 300),
        y: new LinearScale(0, 4, 300, 0),
      };
      const rect = { x0: 47.5, y0: 262.5, x1: 215.0, y1: 80.0 };

      // "Visually enclosed": project every fixture point through the same
      // scales the canvas uses and clip against the raw screen rectangle.
      const enclosed = new Set(
        rows
          .filter((row) => {
            const sx = cell.x.toScreen(row.values["embed_x"] as number);
            const sy = cell.y.toScreen(row.values["embed_y"] as number);
            return (
              sx >= Math.min(rect.x0, rect.x1) &&
              sx <= Math.max(rect.x0, rect.x1) &&
              sy >= Math.min(rect.y0, rect.y1) &&
              sy <= Math.max(rect.y0, rect.y1)
            );
          })
          .map((row) => row.id),
      );
      expect(enclosed.size).toBeGreaterThan(0);
      expect(enclosed.size).toBeLessThan(50);

      const region = fromRectangle(cell, rect);
      const filtered = await api.filterIds(project.id, region);
      expect(filtered).toEqual(enclosed);

      // the selection survives a save/reload round trip by name
      await api.saveRegion(project.id, "brushed", region);
      const byName = await api.getRows(project.id, { region: "brushed" });
      expect(new Set(byName.map((r) => r.id))).toEqual(enclosed);
    },
    60_000,
  );
});

describe("detail loop against the service", () => {
  it(
    "computed points render their PNG, pending points are disabled",
    async () => {
      const project = await api.createProject({
        name: "detail-fixture",
        variables: [
          { name: "phi", role: "factor", default: 0 },
          { name: "f", role: "factor", default: 1 },
          { name: "a", role: "factor", default: 1 },
          { name: "solution", role: "response" },
        ],
        nodes: [
          { name: "sine", command: ["python3", "-m", "paraspace.workers.sine"] },
        ],
      });
      const sampled = await api.sample(project.id, {
        region: {
          type: "and",
          children: [{ type: "interval", var: "a", lo: 0.5, hi: 1.5 }],
        },
        count: 3,
        seed: 1,
      });
      await api.pollJob(sampled.id, 50);
      let rows = await api.getRows(project.id);
      const ran = await api.runRows(project.id, {
        rows: [rows[0].id, rows[1].id],
        workers: 1,
      });
      await api.pollJob(ran.id, 50);
      rows = await api.getRows(project.id);
      const computed = rows.find((r) => r.status === "computed") as RowDoc;
      const pending = rows.find((r) => r.status === "pending") as RowDoc;
      expect(computed && pending).toBeTruthy();

      const panel = new DetailPanel(api, project.id);
      await panel.show(computed, "wave");
      expect(panel.state.kind).toBe("loaded");
      if (panel.state.kind !== "loaded") throw new Error("expected loaded");
      expect([...panel.state.png.slice(0, 4)]).toEqual([0x89, 0x50, 0x4e, 0x47]);
      expect(panel.state.png.length).toBeGreaterThan(100);

      await panel.show(pending, "wave");
      expect(panel.state).toEqual({
        kind: "disabled",
        rowId: pending.id,
        reason: "row is pending",
      });
    },
    60_000,
  );
});
