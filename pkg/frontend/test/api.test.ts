import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import type { FetchLike } from "../src/api.js";

function jsonResponse(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function recordingFetch(
  routes: Record<string, (init?: RequestInit) => Response>,
): { fetch: FetchLike; calls: string[] } {
  const calls: string[] = [];
  return {
    calls,
    fetch: async (input, init) => {
      calls.push(`${init?.method ?? "GET"} ${input}`);
      const handler = routes[input];
      if (!handler) return jsonResponse({ detail: "no route" }, 404);
      return handler(init);
    },
  };
}

describe("ApiClient", () => {
  it("fetches rows verbatim from the service (thin client)", async () => {
    const rows = [
      { id: 0, values: { x: 1.5 }, status: "computed", flags: [], artifact: null },
    ];
    const { fetch, calls } = recordingFetch({
      "/v1/projects/p1/rows": () => jsonResponse({ rows }),
    });
    const api = new ApiClient("", fetch);
    expect(await api.getRows("p1")).toEqual(rows);
    expect(calls).toEqual(["GET /v1/projects/p1/rows"]);
  });

  it("encodes region documents into the rows query", async () => {
    const { fetch, calls } = recordingFetch({});
    const api = new ApiClient("", async (input, init) => {
      await fetch(input, init);
      return jsonResponse({ rows: [] });
    });
    await api.getRows("p1", {
      region: { type: "interval", var: "x", lo: 0, hi: 1 },
      labelColumn: "cluster",
      label: "good",
    });
    const url = new URL(`http://h${calls[0].split(" ")[1]}`);
    expect(JSON.parse(url.searchParams.get("region")!)).toEqual({
      type: "interval",
      var: "x",
      lo: 0,
      hi: 1,
    });
    expect(url.searchParams.get("label_column")).toBe("cluster");
    expect(url.searchParams.get("label")).toBe("good");
  });

  it("surfaces service errors with status and detail", async () => {
    const { fetch } = recordingFetch({
      "/v1/projects/nope": () => jsonResponse({ detail: "no project 'nope'" }, 404),
    });
    const api = new ApiClient("", fetch);
    await expect(api.getProject("nope")).rejects.toMatchObject({
      status: 404,
      message: "no project 'nope'",
    });
  });

  it("polls jobs through to done", async () => {
    const states = ["queued", "running", "running", "done"];
    let call = 0;
    const api = new ApiClient("", async () =>
      jsonResponse({
        id: "job-1",
        kind: "sample",
        state: states[Math.min(call++, states.length - 1)],
        progress: { done: 0, total: 10 },
        error: null,
        result: {},
      }),
    );
    const job = await api.pollJob("job-1", 1);
    expect(job.state).toBe("done");
    expect(call).toBe(4);
  });

  it("rejects when a polled job fails", async () => {
    const api = new ApiClient("", async () =>
      jsonResponse({
        id: "job-2",
        kind: "embed",
        state: "failed",
        progress: { done: 0, total: 0 },
        error: "EmptySelection: no rows",
        result: {},
      }),
    );
    await expect(api.pollJob("job-2", 1)).rejects.toThrow(ApiError);
    await expect(api.pollJob("job-2", 1)).rejects.toThrow(/EmptySelection/);
  });

  it("posts labels with the documented payload", async () => {
    let body: unknown = null;
    const api = new ApiClient("", async (_input, init) => {
      body = JSON.parse(String(init?.body));
      return jsonResponse({ updated: 2 });
    });
    const result = await api.setLabels("p1", [4, 5], "cluster", "good");
    expect(result).toEqual({ updated: 2 });
    expect(body).toEqual({ rows: [4, 5], column: "cluster", label: "good" });
  });
});
