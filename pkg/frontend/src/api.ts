/** Typed client for the /v1 service.  The UI never computes analytics
 * locally: every number it shows went through one of these calls. */

import { regionParam } from "./region.js";
import type { JobDoc, ProjectDoc, RegionDoc, RowDoc } from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface RowQuery {
  region?: RegionDoc | string;
  labelColumn?: string;
  label?: string;
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    signal?: AbortSignal,
  ): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
      signal,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const doc = await response.json();
        if (doc && typeof doc.detail === "string") detail = doc.detail;
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/v1/health");
  }

  createProject(payload: unknown): Promise<ProjectDoc> {
    return this.request("POST", "/v1/projects", payload);
  }

  getProject(id: string): Promise<ProjectDoc> {
    return this.request("GET", `/v1/projects/${id}`);
  }

  async getRows(projectId: string, query: RowQuery = {}): Promise<RowDoc[]> {
    const params = new URLSearchParams();
    if (query.region !== undefined) {
      params.set(
        "region",
        typeof query.region === "string" ? query.region : regionParam(query.region),
      );
    }
    if (query.labelColumn !== undefined) params.set("label_column", query.labelColumn);
    if (query.label !== undefined) params.set("label", query.label);
    const suffix = params.size > 0 ? `?${params.toString()}` : "";
    const doc = await this.request<{ rows: RowDoc[] }>(
      "GET",
      `/v1/projects/${projectId}/rows${suffix}`,
    );
    return doc.rows;
  }

  /** Row ids the service says fall inside a region; the single source of
   * truth for linked highlighting. */
  async filterIds(projectId: string, region: RegionDoc): Promise<Set<number>> {
    const rows = await this.getRows(projectId, { region });
    return new Set(rows.map((r) => r.id));
  }

  sample(projectId: string, payload: unknown): Promise<JobDoc> {
    return this.request("POST", `/v1/projects/${projectId}/sample`, payload);
  }

  runRows(projectId: string, payload: unknown): Promise<JobDoc> {
    return this.request("POST", `/v1/projects/${projectId}/runs`, payload);
  }

  embed(projectId: string, payload: unknown): Promise<JobDoc> {
    return this.request("POST", `/v1/projects/${projectId}/embeddings`, payload);
  }

  setLabels(
    projectId: string,
    rows: number[],
    column: string,
    label: string,
  ): Promise<{ updated: number }> {
    return this.request("POST", `/v1/projects/${projectId}/labels`, {
      rows,
      column,
      label,
    });
  }

  saveRegion(
    projectId: string,
    name: string,
    region: RegionDoc,
  ): Promise<{ saved: string }> {
    return this.request("POST", `/v1/projects/${projectId}/regions`, {
      name,
      region,
    });
  }

  getJob(id: string): Promise<JobDoc> {
    return this.request("GET", `/v1/jobs/${id}`);
  }

  /** Poll a job to a terminal state; resolves on done, rejects on failed. */
  async pollJob(
    id: string,
    intervalMs = 500,
    timeoutMs = 120_000,
  ): Promise<JobDoc> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.getJob(id);
      if (job.state === "done") return job;
      if (job.state === "failed") {
        throw new ApiError(500, job.error ?? `job ${id} failed`);
      }
      if (Date.now() > deadline) throw new ApiError(408, `job ${id} timed out`);
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  detailUrl(projectId: string, rowId: number, plot: string): string {
    return `${this.baseUrl}/v1/projects/${projectId}/detail/${rowId}/${plot}`;
  }

  /** Fetch a detail plot as PNG bytes; abortable for last-click-wins. */
  async fetchDetail(
    projectId: string,
    rowId: number,
    plot: string,
    signal?: AbortSignal,
  ): Promise<Uint8Array> {
    const response = await this.fetchImpl(this.detailUrl(projectId, rowId, plot), {
      method: "GET",
      signal,
    });
    if (!response.ok) {
      throw new ApiError(response.status, `detail ${rowId}/${plot} unavailable`);
    }
    return new Uint8Array(await response.arrayBuffer());
  }
}
