/**
 * Typed client for the workbench HTTP API.
 *
 * The explorer renders only numbers the server computed; nothing in
 * here aggregates, bins, or rescales data beyond pixel mapping.
 */

export interface VariableInfo {
  name: string;
  kind: "int" | "float" | "bool" | "string";
}

export interface NodeSummary {
  id: string;
  kind: "property" | "type" | "executable";
  variables: VariableInfo[];
  fitted: boolean;
  family: string | null;
  sample_count: number;
  low_confidence: boolean;
}

export interface EdgeInfo {
  src: string;
  dst: string;
  kind: "param" | "read" | "call" | "member";
  site: number | null;
  latent: boolean;
}

export interface ApiMeta {
  bundle: string;
  server_seed: number;
  seed_used: number;
}

export interface NetworkPayload {
  nodes: NodeSummary[];
  edges: EdgeInfo[];
  meta: ApiMeta;
}

export interface ContinuousCurve {
  kind: "continuous";
  edges: number[];
  centers: number[];
  observed_density: number[];
  fitted_density: number[];
  summary: {
    count: number;
    min: number | null;
    max: number | null;
    mean: number | null;
    std: number | null;
    q25: number | null;
    median: number | null;
    q75: number | null;
  };
}

export interface CategoricalCurve {
  kind: "categorical";
  observed: Record<string, number>;
  fitted: Record<string, number>;
}

export type Curve = ContinuousCurve | CategoricalCurve;

export interface NodePayload {
  id: string;
  kind: string;
  fitted: boolean;
  family: string | null;
  sample_count: number;
  low_confidence: boolean;
  variables: VariableInfo[];
  curves: Record<string, Curve>;
  meta: ApiMeta;
}

export interface IntervalConstraint {
  lo?: number;
  hi?: number;
}

export type Constraint = number | string | boolean | IntervalConstraint;

export interface DistributionSummary {
  histogram?: { edges: number[]; density: number[] };
  mean?: number;
  std?: number;
  quantiles?: Record<string, number>;
  n?: number;
  values?: Record<string, number>;
  oov_mass?: number;
}

export interface QueryResultPayload {
  kind: string;
  node: string;
  probability?: number;
  distributions?: Record<string, DistributionSummary>;
  rows?: Record<string, unknown>[];
  score?: number;
  provenance: Record<string, unknown>;
  meta: ApiMeta;
}

export interface RipplePoint {
  node: string;
  frame: number;
  depth: number;
  score: number;
  detected: boolean;
}

export interface AnomalyPayload {
  node: string;
  values: Record<string, unknown>;
  score: number;
  threshold: number;
  detected: boolean;
  traced: boolean;
  ripple: RipplePoint[];
  ripple_distance: number | null;
  perceived: boolean | null;
  meta: ApiMeta;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly payload: unknown,
  ) {
    super(`API error ${status}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json();
  if (!resp.ok) {
    throw new ApiError(resp.status, body);
  }
  return body as T;
}

export class Client {
  constructor(readonly base: string = "") {}

  network(): Promise<NetworkPayload> {
    return request(`${this.base}/api/network`);
  }

  node(id: string): Promise<NodePayload> {
    return request(`${this.base}/api/node/${encodeURIComponent(id)}`);
  }

  query(body: {
    kind: string;
    targets?: string[];
    constraints?: Record<string, Constraint>;
    n?: number;
    seed?: number;
  }): Promise<QueryResultPayload> {
    return request(`${this.base}/api/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  anomaly(body: {
    node: string;
    values: Record<string, unknown>;
    tau?: number;
    trace?: string;
  }): Promise<AnomalyPayload> {
    return request(`${this.base}/api/anomaly`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
