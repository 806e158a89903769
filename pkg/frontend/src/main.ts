/**
 * Application controller. Owns the SessionState, wires the three views
 * together, talks to the service through ApiClient and mirrors every
 * state change into the URL fragment.
 *
 * Concurrency rule: at most one in-flight search per (stop, algorithm)
 * pair. Each dispatch bumps a sequence number and aborts the previous
 * request for that pair; a response is applied only if its sequence is
 * still the latest, so slow replies can never overwrite fresh ones.
 */

import { ApiClient, ApiError, type FetchFn, type SearchResponse } from "./api.js";
import { createCompareView, type CompareView } from "./compareView.js";
import { createMapView, type MapView } from "./mapView.js";
import { createQueryPanel, type QueryPanel } from "./queryPanel.js";
import {
  defaultState,
  parseState,
  serializeState,
  SWEEP_STOPS,
  type PStop,
  type SessionState,
} from "./state.js";

export interface AppOptions {
  baseUrl: string;
  fragment?: string;
  fetchFn?: FetchFn;
  onFragmentChange?: (fragment: string) => void;
}

export interface AppController {
  state(): SessionState;
  fragment(): string;
  /** Resolves once no search or embedding request is in flight. */
  whenIdle(): Promise<void>;
  readonly panel: QueryPanel;
  readonly compare: CompareView;
  readonly map: MapView;
}

interface InFlight {
  seq: number;
  controller: AbortController;
}

export function createApp(root: HTMLElement, options: AppOptions): AppController {
  const api = new ApiClient(options.baseUrl, options.fetchFn);
  const state: SessionState = options.fragment !== undefined ? parseState(options.fragment) : defaultState();

  root.classList.add("app");
  const panelRoot = document.createElement("section");
  const compareRoot = document.createElement("section");
  const mapRoot = document.createElement("section");
  root.append(panelRoot, compareRoot, mapRoot);

  let pending = 0;
  let idleWaiters: (() => void)[] = [];
  function beginOp(): void {
    pending += 1;
  }
  function endOp(): void {
    pending -= 1;
    if (pending === 0) {
      const waiters = idleWaiters;
      idleWaiters = [];
      for (const resolve of waiters) resolve();
    }
  }

  function publishFragment(): void {
    const fragment = serializeState(state);
    if (options.onFragmentChange) {
      options.onFragmentChange(fragment);
    } else if (typeof history !== "undefined" && typeof location !== "undefined") {
      history.replaceState(null, "", `${location.pathname}${location.search}#${fragment}`);
    }
  }

  function refresh(): void {
    panel.update(state);
    compare.update(state);
    publishFragment();
  }

  // One slot per (algorithm, stop); a new dispatch evicts the old one.
  const inflight = new Map<string, InFlight>();
  let seqCounter = 0;

  function dispatchSearch(stop: PStop, algo: "greedy" | "anneal"): void {
    if (state.query.length === 0) return;
    const key = `${algo}:${stop}`;
    const previous = inflight.get(key);
    if (previous) previous.controller.abort();
    const seq = ++seqCounter;
    const controller = new AbortController();
    inflight.set(key, { seq, controller });

    const request = {
      query: state.query.map((m) => m.id),
      p: stop,
      k: state.k,
      algorithm: algo,
      gamma: state.gamma,
    };

    beginOp();
    api
      .search(request)
      .then((response: SearchResponse) => {
        const current = inflight.get(key);
        if (!current || current.seq !== seq) return; // stale, a newer dispatch won
        inflight.delete(key);
        if (algo === "anneal") state.annealResponses[stop] = response;
        else state.responses[stop] = response;
        panel.clearError();
        refresh();
      })
      .catch((err: unknown) => {
        const current = inflight.get(key);
        if (!current || current.seq !== seq) return;
        inflight.delete(key);
        if (err instanceof DOMException && err.name === "AbortError") return;
        const message = err instanceof ApiError ? err.message : `service unreachable: ${String(err)}`;
        panel.showError(message, () => dispatchSearch(stop, algo));
      })
      .finally(endOp);
  }

  function clearResponses(): void {
    state.responses = {};
    state.annealResponses = {};
  }

  /** Stops currently on display, to repeat after the query set changes. */
  function activeStops(): { greedy: PStop[]; anneal: PStop[] } {
    return {
      greedy: Object.keys(state.responses) as PStop[],
      anneal: Object.keys(state.annealResponses) as PStop[],
    };
  }

  function researchAfterQueryChange(): void {
    const { greedy, anneal } = activeStops();
    clearResponses();
    refresh();
    if (state.query.length === 0) return;
    const greedyStops = greedy.length > 0 ? greedy : [state.p];
    for (const stop of greedyStops) dispatchSearch(stop, "greedy");
    for (const stop of anneal) dispatchSearch(stop, "anneal");
  }

  const panel = createQueryPanel(panelRoot, {
    typeahead: (q) => api.movies(q),
    addMovie(movie) {
      if (state.query.some((m) => m.id === movie.id)) return;
      state.query.push(movie);
      clearResponses();
      refresh();
    },
    removeMovie(id) {
      state.query = state.query.filter((m) => m.id !== id);
      researchAfterQueryChange();
    },
    setP(p) {
      state.p = p;
      map.setActiveP(p); // rings move, the embedding itself is reused
      if (state.query.length > 0 && state.responses[p] === undefined) {
        dispatchSearch(p, "greedy");
        if (Object.keys(state.annealResponses).length > 0) dispatchSearch(p, "anneal");
      }
      refresh();
    },
    setK(k) {
      state.k = k;
      clearResponses();
      refresh();
    },
    search() {
      panel.clearError();
      dispatchSearch(state.p, "greedy");
    },
    sweep() {
      panel.clearError();
      for (const stop of SWEEP_STOPS) dispatchSearch(stop, "greedy");
      if (Object.keys(state.annealResponses).length > 0) {
        for (const stop of SWEEP_STOPS) dispatchSearch(stop, "anneal");
      }
    },
    loadMap() {
      loadEmbedding();
    },
  });

  const compare = createCompareView(compareRoot, {
    addToQuery(movie) {
      if (state.query.some((m) => m.id === movie.id)) return;
      state.query.push(movie);
      researchAfterQueryChange();
    },
    toggleAnneal(on) {
      if (!on) {
        state.annealResponses = {};
        refresh();
        return;
      }
      for (const stop of Object.keys(state.responses) as PStop[]) {
        dispatchSearch(stop, "anneal");
      }
    },
  });

  const map = createMapView(mapRoot, {
    addToQuery(movie) {
      if (state.query.some((m) => m.id === movie.id)) return;
      state.query.push(movie);
      researchAfterQueryChange();
    },
    viewChanged(view) {
      state.map = view;
      publishFragment();
    },
  });

  function loadEmbedding(): void {
    if (state.query.length === 0) return;
    beginOp();
    api
      .embedding({
        ids: state.query.map((m) => m.id),
        k: Math.min(state.k, 10),
        p_values: ["0", "1", "2", "3", "inf"],
        gamma: state.gamma,
      })
      .then((response) => {
        map.render(response, state.p, state.map);
      })
      .catch((err: unknown) => {
        if (err instanceof ApiError && err.status === 413) {
          map.showCapError(err.message);
          return;
        }
        const message = err instanceof ApiError ? err.message : `service unreachable: ${String(err)}`;
        panel.showError(message, loadEmbedding);
      })
      .finally(endOp);
  }

  refresh();

  return {
    state: () => state,
    fragment: () => serializeState(state),
    whenIdle() {
      if (pending === 0) return Promise.resolve();
      return new Promise((resolve) => idleWaiters.push(resolve));
    },
    panel,
    compare,
    map,
  };
}
