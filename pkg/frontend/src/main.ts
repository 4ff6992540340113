/** Browser wiring: canvas SPloM, brushing, labeling, and the detail panel.
 * Pure logic lives in the sibling modules; this file only touches the DOM.
 */

import { ApiClient } from "./api.js";
import { BrushController, nearestPoint } from "./brush.js";
import { DetailPanel } from "./detail.js";
import {
  HIGHLIGHT_COLOR,
  SplomScene,
  UNLABELED_COLOR,
  computeSplom,
  labelColor,
  numericColor,
} from "./splom.js";
import { ViewState } from "./viewstate.js";
import { extent } from "./scales.js";
import type { RowDoc } from "./types.js";

type Scatter = Extract<SplomScene["cells"][number], { kind: "scatter" }>;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

let api = new ApiClient("http://127.0.0.1:8722");
const view = new ViewState();
let rows: RowDoc[] = [];
let scene: SplomScene | null = null;
let detail: DetailPanel | null = null;

async function loadProject(projectId: string): Promise<void> {
  const project = await api.getProject(projectId);
  view.projectId = project.id;
  detail = new DetailPanel(api, project.id);
  detail.onChange(renderDetail);
  rows = await api.getRows(project.id);

  const groupSelect = el<HTMLSelectElement>("group");
  groupSelect.innerHTML = "";
  const groups = project.groups.length
    ? project.groups
    : [{ name: "all", members: project.variables.map((v) => v.name) }];
  for (const group of groups) {
    const option = document.createElement("option");
    option.value = option.textContent = group.name;
    groupSelect.appendChild(option);
  }
  groupSelect.onchange = () => {
    const group = groups.find((g) => g.name === groupSelect.value) ?? groups[0];
    scene = computeSplom(group.members, rows);
    draw();
  };
  groupSelect.onchange(new Event("change"));

  const colorSelect = el<HTMLSelectElement>("colorby");
  colorSelect.innerHTML = "<option value=''>(none)</option>";
  for (const variable of project.variables) {
    const option = document.createElement("option");
    option.value = option.textContent = variable.name;
    colorSelect.appendChild(option);
  }
  colorSelect.onchange = () => view.setColorBy(colorSelect.value || null);
}

function pointColor(row: RowDoc): string {
  const column = view.colorBy;
  if (!column) return UNLABELED_COLOR;
  const value = row.values[column];
  if (typeof value === "string") {
    const order = [...new Set(rows.map((r) => String(r.values[column] ?? "")))]
      .filter((label) => label !== "unlabeled")
      .sort();
    return labelColor(value, order);
  }
  if (typeof value === "number") {
    const values = rows
      .map((r) => r.values[column])
      .filter((v): v is number => typeof v === "number");
    const [lo, hi] = extent(values);
    return numericColor(value, lo, hi);
  }
  return UNLABELED_COLOR;
}

function draw(): void {
  if (!scene) return;
  const canvas = el<HTMLCanvasElement>("splom");
  const n = scene.variables.length;
  const span = n * (scene.cellSize + 8);
  canvas.width = span;
  canvas.height = span;
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const byId = new Map(rows.map((row) => [row.id, row]));

  for (const cell of scene.cells) {
    ctx.strokeStyle = "#999";
    ctx.strokeRect(cell.originX, cell.originY, cell.size, cell.size);
    if (cell.kind === "scatter") {
      for (const point of scene.points) {
        const row = byId.get(point.id);
        if (!row) continue;
        const px = cell.x.toScreen(point.coords[cell.xVar]);
        const py = cell.y.toScreen(point.coords[cell.yVar]);
        ctx.fillStyle = view.highlighted.has(point.id)
          ? HIGHLIGHT_COLOR
          : pointColor(row);
        ctx.beginPath();
        ctx.arc(px, py, point.id === view.highlightRow ? 4 : 2, 0, 2 * Math.PI);
        ctx.fill();
      }
      ctx.fillStyle = "#444";
      ctx.font = "9px sans-serif";
      ctx.fillText(`${cell.xVar} / ${cell.yVar}`, cell.originX + 3, cell.originY + 10);
    } else if (cell.kind === "histogram") {
      const max = Math.max(1, ...cell.counts);
      const barWidth = cell.size / cell.counts.length;
      ctx.fillStyle = "#9db8d9";
      cell.counts.forEach((count, i) => {
        const h = (count / max) * (cell.size - 6);
        ctx.fillRect(
          cell.originX + i * barWidth,
          cell.originY + cell.size - h,
          barWidth - 1,
          h,
        );
      });
    } else if (cell.kind === "range_selector") {
      ctx.fillStyle = "#666";
      ctx.font = "10px sans-serif";
      ctx.fillText(
        `${cell.variable}: ${cell.domain[0].toPrecision(3)} .. ${cell.domain[1].toPrecision(3)}`,
        cell.originX + 4,
        cell.originY + cell.size / 2,
      );
    }
  }
}

function cellAt(sx: number, sy: number): Scatter | null {
  if (!scene) return null;
  for (const cell of scene.cells) {
    if (
      cell.kind === "scatter" &&
      sx >= cell.originX &&
      sx <= cell.originX + cell.size &&
      sy >= cell.originY &&
      sy <= cell.originY + cell.size
    ) {
      return cell;
    }
  }
  return null;
}

function renderDetail(): void {
  if (!detail) return;
  const img = el<HTMLImageElement>("detail-img");
  const note = el<HTMLElement>("detail-note");
  const state = detail.state;
  if (state.kind === "loaded") {
    const blob = new Blob([state.png.slice().buffer as ArrayBuffer], { type: "image/png" });
    img.src = URL.createObjectURL(blob);
    note.textContent = `row ${state.rowId}`;
  } else if (state.kind === "disabled") {
    img.removeAttribute("src");
    note.textContent = `row ${state.rowId}: ${state.reason}`;
  } else if (state.kind === "missing") {
    img.removeAttribute("src");
    note.textContent = `row ${state.rowId}: image unavailable (retry?)`;
  } else if (state.kind === "loading") {
    note.textContent = "loading";
  }
}

function wireCanvas(): void {
  const canvas = el<HTMLCanvasElement>("splom");
  let brush: BrushController | null = null;

  canvas.onmousedown = (event) => {
    const cell = cellAt(event.offsetX, event.offsetY);
    if (!cell) return;
    brush = new BrushController(cell);
    brush.begin(event.offsetX, event.offsetY);
  };
  canvas.onmousemove = (event) => {
    if (brush?.active) {
      brush.move(event.offsetX, event.offsetY);
      draw();
      const rect = brush.rect();
      if (rect) {
        const ctx = canvas.getContext("2d")!;
        ctx.strokeStyle = "#333";
        ctx.setLineDash([5, 3]);
        ctx.strokeRect(
          Math.min(rect.x0, rect.x1),
          Math.min(rect.y0, rect.y1),
          Math.abs(rect.x1 - rect.x0),
          Math.abs(rect.y1 - rect.y0),
        );
        ctx.setLineDash([]);
      }
    }
  };
  canvas.onmouseup = async () => {
    if (!brush || !scene) return;
    const result = brush.end();
    const cell = brush.cell;
    brush = null;
    if (!result) return;
    if (result.kind === "cursor") {
      const rowId = nearestPoint(cell, scene.points, result.at.x, result.at.y);
      view.setHighlightRow(rowId);
      const row = rows.find((r) => r.id === rowId);
      if (row && detail) {
        const plot = el<HTMLInputElement>("plot").value || "trajectory";
        await detail.show(row, plot);
      }
      return;
    }
    await view.select(api, result.region);
  };

  el<HTMLButtonElement>("clear").onclick = () => view.clearSelection();
  el<HTMLButtonElement>("apply-label").onclick = async () => {
    if (!view.projectId) return;
    const column = el<HTMLInputElement>("label-column").value;
    const label = el<HTMLInputElement>("label-value").value;
    if (!column || !label || view.highlighted.size === 0) return;
    await api.setLabels(view.projectId, [...view.highlighted], column, label);
    rows = await api.getRows(view.projectId);
    draw();
  };
  el<HTMLButtonElement>("save-region").onclick = async () => {
    if (!view.projectId) return;
    const name = el<HTMLInputElement>("region-name").value;
    if (name) await api.saveRegion(view.projectId, name, view.selection);
  };
}

export function start(): void {
  view.onChange(draw);
  el<HTMLButtonElement>("load").onclick = () => {
    const base = el<HTMLInputElement>("service").value.trim();
    if (base) api = new ApiClient(base.replace(/\/$/, ""));
    const projectId = el<HTMLInputElement>("project").value.trim();
    if (projectId) void loadProject(projectId);
  };
  wireCanvas();
}

if (typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", start);
}
