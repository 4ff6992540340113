/** Wire types mirroring the /v1 service, including .region.json documents. */

export interface IntervalDoc {
  type: "interval";
  var: string;
  lo: number;
  hi: number;
}

export interface BallDoc {
  type: "ball";
  vars: string[];
  center: number[];
  radius: number;
  p?: number | "inf";
  weights?: number[];
}

export interface AndDoc {
  type: "and";
  children: RegionDoc[];
}

export interface OrDoc {
  type: "or";
  children: RegionDoc[];
}

export interface NotDoc {
  type: "not";
  child: RegionDoc;
}

export interface AllDoc {
  type: "all";
}

export type RegionDoc = IntervalDoc | BallDoc | AndDoc | OrDoc | NotDoc | AllDoc;

export type CellValue = number | number[] | string;

export type RowStatus = "pending" | "computed" | "failed";

export interface RowDoc {
  id: number;
  values: Record<string, CellValue>;
  status: RowStatus;
  flags: string[];
  artifact: string | null;
}

export interface VariableDoc {
  name: string;
  role: "factor" | "response" | "derived" | "label" | "embedding";
  units?: string | null;
  default?: number | null;
}

export interface ProjectDoc {
  id: string;
  name: string;
  variables: VariableDoc[];
  row_count: number;
  regions: string[];
  groups: { name: string; members: string[] }[];
  nodes: { name: string; command?: string[]; host?: string; port?: number }[];
  embeddings: Record<string, unknown>;
}

export interface JobDoc {
  id: string;
  kind: "sample" | "batch_run" | "embed";
  state: "queued" | "running" | "done" | "failed";
  progress: { done: number; total: number };
  error: string | null;
  result: Record<string, unknown>;
}
