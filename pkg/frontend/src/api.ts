/**
 * Thin typed wrappers over the votesearch HTTP service.
 *
 * Every shape here mirrors what the service emits verbatim. The client
 * never recomputes any number: scores, relevance values and distances
 * are displayed exactly as they arrive in these payloads.
 */

export type PStop = "0" | "1" | "2" | "3" | "inf";
export type Algorithm = "greedy" | "anneal" | "exact";

export interface MovieRow {
  id: number;
  title: string;
  genres: string[];
  global_approvals: number;
}

export interface MemberRow {
  id: number;
  title: string;
  genres: string[];
  tfidf: number;
  local_approvals: number;
  global_approvals: number;
  iteration: number | null;
}

export interface SearchResponse {
  query: number[];
  p: string;
  k: number;
  algorithm: Algorithm;
  gamma: number;
  seed: number | null;
  members: MemberRow[];
  score: number;
  truncated: boolean;
  timing_ms: number;
}

export interface SearchRequest {
  query: number[];
  p: string;
  k: number;
  algorithm: Algorithm;
  gamma?: number;
  seed?: number;
}

export interface EmbeddingNode {
  id: number;
  title: string;
  genre: string;
  genres: string[];
  x: number;
  y: number;
}

export interface EmbeddingEdge {
  a: number;
  b: number;
  diss: number;
}

export interface EmbeddingCommittee {
  query: number;
  p: string;
  members: number[];
}

export interface EmbeddingResponse {
  nodes: EmbeddingNode[];
  edges: EmbeddingEdge[];
  committees: EmbeddingCommittee[];
  k: number;
  p_values: string[];
  gamma: number;
  seed: number;
  iterations: number;
}

export interface HealthResponse {
  status: string;
  agents: number;
  resources: number;
}

/** Error raised for any non-2xx service reply, carrying the HTTP status. */
export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

function defaultFetch(): FetchFn {
  return (input, init) => globalThis.fetch(input, init);
}

function detailText(body: unknown): string {
  if (body && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    if (typeof detail === "string") return detail;
    if (Array.isArray(detail)) {
      return detail
        .map((row) => (row && typeof row === "object" && "msg" in row ? String(row.msg) : JSON.stringify(row)))
        .join("; ");
    }
  }
  return JSON.stringify(body);
}

async function parseOrThrow<T>(res: Response): Promise<T> {
  let body: unknown;
  try {
    body = await res.json();
  } catch {
    body = null;
  }
  if (!res.ok) {
    throw new ApiError(res.status, body === null ? `HTTP ${res.status}` : detailText(body));
  }
  return body as T;
}

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchFn: FetchFn;

  constructor(baseUrl: string, fetchFn?: FetchFn) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? defaultFetch();
  }

  async health(): Promise<HealthResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/healthz`);
    return parseOrThrow<HealthResponse>(res);
  }

  async movies(q: string, limit = 12): Promise<MovieRow[]> {
    const params = new URLSearchParams({ q, limit: String(limit) });
    const res = await this.fetchFn(`${this.baseUrl}/movies?${params}`);
    return parseOrThrow<MovieRow[]>(res);
  }

  async search(req: SearchRequest): Promise<SearchResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/search`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return parseOrThrow<SearchResponse>(res);
  }

  async embedding(req: {
    ids: number[];
    k?: number;
    p_values?: string[];
    gamma?: number;
    iterations?: number;
    seed?: number;
  }): Promise<EmbeddingResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/embedding`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return parseOrThrow<EmbeddingResponse>(res);
  }
}
