/**
 * Session state and its URL-fragment encoding.
 *
 * The whole exploration session lives in one client-side object: the
 * query set (with titles so chips render without a lookup), the
 * selected diversity stop, committee size, algorithm and gamma, the
 * last search response per stop, and the map's pan/zoom/hover state.
 *
 * serializeState and parseState are exact inverses for any state this
 * app can produce, so copying the address bar reproduces the session.
 * Everything rides in the fragment (after "#"), never in the query
 * string, so restoring state costs no extra request.
 */

import type { Algorithm, PStop, SearchResponse } from "./api.js";

export type { Algorithm, PStop } from "./api.js";

export const P_STOPS: readonly PStop[] = ["0", "1", "2", "3", "inf"];

/** Stops shown in the side-by-side sweep. */
export const SWEEP_STOPS: readonly PStop[] = ["0", "1", "2", "3"];

export interface QueryMovie {
  id: number;
  title: string;
}

export interface MapViewState {
  panX: number;
  panY: number;
  zoom: number;
  hovered: number | null;
}

export interface SessionState {
  query: QueryMovie[];
  p: PStop;
  k: number;
  algorithm: Algorithm;
  gamma: number;
  /** Greedy responses keyed by stop, as returned by the service. */
  responses: Partial<Record<PStop, SearchResponse>>;
  /** Annealing responses, present only after the algorithm toggle. */
  annealResponses: Partial<Record<PStop, SearchResponse>>;
  map: MapViewState;
}

export function defaultState(): SessionState {
  return {
    query: [],
    p: "0",
    k: 10,
    algorithm: "greedy",
    gamma: 2.0,
    responses: {},
    annealResponses: {},
    map: { panX: 0, panY: 0, zoom: 1, hovered: null },
  };
}

function isPStop(value: string): value is PStop {
  return (P_STOPS as readonly string[]).includes(value);
}

function encodeResponses(record: Partial<Record<PStop, SearchResponse>>): string | null {
  const keys = Object.keys(record);
  if (keys.length === 0) return null;
  return JSON.stringify(record);
}

/**
 * Encode a session into a fragment string (without the leading "#").
 * Scalar settings use readable keys; structured parts are JSON values
 * that URLSearchParams percent-escapes for us.
 */
export function serializeState(state: SessionState): string {
  const params = new URLSearchParams();
  if (state.query.length > 0) {
    params.set("q", JSON.stringify(state.query.map((m) => [m.id, m.title])));
  }
  params.set("p", state.p);
  params.set("k", String(state.k));
  params.set("algo", state.algorithm);
  params.set("gamma", String(state.gamma));
  const resp = encodeResponses(state.responses);
  if (resp !== null) params.set("resp", resp);
  const anneal = encodeResponses(state.annealResponses);
  if (anneal !== null) params.set("anneal", anneal);
  const { panX, panY, zoom, hovered } = state.map;
  if (panX !== 0 || panY !== 0 || zoom !== 1 || hovered !== null) {
    params.set("view", JSON.stringify([panX, panY, zoom, hovered]));
  }
  return params.toString();
}

function parseQueryParam(raw: string | null): QueryMovie[] {
  if (!raw) return [];
  try {
    const pairs = JSON.parse(raw);
    if (!Array.isArray(pairs)) return [];
    const out: QueryMovie[] = [];
    for (const pair of pairs) {
      if (Array.isArray(pair) && typeof pair[0] === "number" && typeof pair[1] === "string") {
        out.push({ id: pair[0], title: pair[1] });
      }
    }
    return out;
  } catch {
    return [];
  }
}

function parseResponsesParam(raw: string | null): Partial<Record<PStop, SearchResponse>> {
  if (!raw) return {};
  try {
    const parsed = JSON.parse(raw);
    if (!parsed || typeof parsed !== "object" || Array.isArray(parsed)) return {};
    const out: Partial<Record<PStop, SearchResponse>> = {};
    for (const [key, value] of Object.entries(parsed)) {
      if (isPStop(key) && value && typeof value === "object") {
        out[key] = value as SearchResponse;
      }
    }
    return out;
  } catch {
    return {};
  }
}

/**
 * Decode a fragment produced by serializeState. Unknown keys are
 * ignored and malformed values fall back to the defaults, so stale or
 * hand-edited links degrade instead of crashing the app.
 */
export function parseState(fragment: string): SessionState {
  const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  const params = new URLSearchParams(raw);
  const state = defaultState();

  state.query = parseQueryParam(params.get("q"));

  const p = params.get("p");
  if (p !== null && isPStop(p)) state.p = p;

  const k = Number(params.get("k"));
  if (Number.isInteger(k) && k >= 1) state.k = k;

  const algo = params.get("algo");
  if (algo === "greedy" || algo === "anneal" || algo === "exact") state.algorithm = algo;

  const gamma = Number(params.get("gamma"));
  if (Number.isFinite(gamma) && gamma > 0) state.gamma = gamma;

  state.responses = parseResponsesParam(params.get("resp"));
  state.annealResponses = parseResponsesParam(params.get("anneal"));

  const view = params.get("view");
  if (view !== null) {
    try {
      const arr = JSON.parse(view);
      if (
        Array.isArray(arr) &&
        arr.length === 4 &&
        typeof arr[0] === "number" &&
        typeof arr[1] === "number" &&
        typeof arr[2] === "number" &&
        (typeof arr[3] === "number" || arr[3] === null)
      ) {
        state.map = { panX: arr[0], panY: arr[1], zoom: arr[2], hovered: arr[3] };
      }
    } catch {
      // keep defaults
    }
  }
  return state;
}
