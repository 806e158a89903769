import { describe, expect, it } from "vitest";

import type { SearchResponse } from "../src/api.js";
import { defaultState, parseState, serializeState, type SessionState } from "../src/state.js";

function fakeResponse(p: string, memberIds: number[]): SearchResponse {
  return {
    query: [7],
    p,
    k: memberIds.length,
    algorithm: "greedy",
    gamma: 2.0,
    seed: null,
    members: memberIds.map((id, i) => ({
      id,
      title: `Movie ${id}`,
      genres: ["Category 1"],
      tfidf: 3.25 + i * 0.125,
      local_approvals: 10 - i,
      global_approvals: 40 + i,
      iteration: i,
    })),
    score: 12.625,
    truncated: false,
    timing_ms: 4.217,
  };
}

describe("fragment round-trip", () => {
  it("restores an identical fully populated state", () => {
    const state: SessionState = {
      query: [
        { id: 7, title: "Movie 1.1.07" },
        { id: 42, title: "Odd & \"quoted\" #title?" },
      ],
      p: "2",
      k: 5,
      algorithm: "anneal",
      gamma: 1.5,
      responses: { "0": fakeResponse("0", [3, 4, 1]), "2": fakeResponse("2", [3, 9]) },
      annealResponses: { "2": fakeResponse("2", [3, 11]) },
      map: { panX: -0.3125, panY: 0.875, zoom: 2.5, hovered: 42 },
    };
    const roundTripped = parseState(serializeState(state));
    expect(roundTripped).toEqual(state);
  });

  it("restores the defaults from their own encoding", () => {
    const state = defaultState();
    expect(parseState(serializeState(state))).toEqual(state);
  });

  it("accepts a leading hash", () => {
    const state = defaultState();
    state.p = "inf";
    state.k = 3;
    expect(parseState("#" + serializeState(state))).toEqual(state);
  });

  it("survives float view coordinates exactly", () => {
    const state = defaultState();
    state.map = { panX: 0.1 + 0.2, panY: 1 / 3, zoom: Math.SQRT2, hovered: null };
    const back = parseState(serializeState(state));
    expect(back.map.panX).toBe(state.map.panX);
    expect(back.map.panY).toBe(state.map.panY);
    expect(back.map.zoom).toBe(state.map.zoom);
  });
});

describe("fragment parsing of foreign input", () => {
  it("returns defaults for an empty fragment", () => {
    expect(parseState("")).toEqual(defaultState());
    expect(parseState("#")).toEqual(defaultState());
  });

  it("ignores unknown keys", () => {
    const state = parseState("p=3&k=4&utm_source=mail&foo=bar");
    expect(state.p).toBe("3");
    expect(state.k).toBe(4);
    expect(state.query).toEqual([]);
  });

  it("falls back to defaults on malformed values", () => {
    const state = parseState("p=seven&k=-2&gamma=zero&q=%7Bnot-json&view=oops");
    const fresh = defaultState();
    expect(state.p).toBe(fresh.p);
    expect(state.k).toBe(fresh.k);
    expect(state.gamma).toBe(fresh.gamma);
    expect(state.query).toEqual([]);
    expect(state.map).toEqual(fresh.map);
  });

  it("drops query entries with the wrong shape", () => {
    const q = encodeURIComponent(JSON.stringify([[1, "Good"], ["2", "bad id"], [3]]));
    const state = parseState(`q=${q}`);
    expect(state.query).toEqual([{ id: 1, title: "Good" }]);
  });

  it("keeps only well-formed response keys", () => {
    const resp = encodeURIComponent(JSON.stringify({ "0": fakeResponse("0", [1]), "9": fakeResponse("9", [2]) }));
    const state = parseState(`resp=${resp}`);
    expect(Object.keys(state.responses)).toEqual(["0"]);
  });
});
