/**
 * Side-by-side committee comparison. One column per diversity stop that
 * has a response (two sub-columns per stop once annealing results are
 * loaded), rows aligned by rank. A movie appearing in more than one
 * column gets a stable link hue so the eye can track it across stops.
 *
 * All numbers shown here (relevance, committee score, timing) are the
 * service's own values rendered verbatim via String().
 */

import type { MemberRow, SearchResponse } from "./api.js";
import { P_STOPS, type PStop, type SessionState } from "./state.js";

const SHARED_HUES = 8;

export interface CompareViewHandlers {
  addToQuery(movie: { id: number; title: string }): void;
  toggleAnneal(on: boolean): void;
}

export interface CompareView {
  update(state: SessionState): void;
  readonly element: HTMLElement;
}

interface Column {
  stop: PStop;
  algo: "greedy" | "anneal";
  response: SearchResponse;
}

function displayedStops(state: SessionState): PStop[] {
  return P_STOPS.filter((stop) => state.responses[stop] !== undefined);
}

function collectColumns(state: SessionState): Column[] {
  const columns: Column[] = [];
  for (const stop of displayedStops(state)) {
    const greedy = state.responses[stop];
    if (greedy) columns.push({ stop, algo: "greedy", response: greedy });
    const anneal = state.annealResponses[stop];
    if (anneal) columns.push({ stop, algo: "anneal", response: anneal });
  }
  return columns;
}

/** Assign a hue index to every movie id that shows up in 2+ columns. */
function sharedHues(columns: Column[]): Map<number, number> {
  const seenIn = new Map<number, Set<number>>();
  columns.forEach((col, idx) => {
    for (const m of col.response.members) {
      let set = seenIn.get(m.id);
      if (!set) {
        set = new Set();
        seenIn.set(m.id, set);
      }
      set.add(idx);
    }
  });
  const hues = new Map<number, number>();
  let next = 0;
  for (const [id, cols] of seenIn) {
    if (cols.size >= 2) {
      hues.set(id, next % SHARED_HUES);
      next += 1;
    }
  }
  return hues;
}

export function createCompareView(root: HTMLElement, handlers: CompareViewHandlers): CompareView {
  root.classList.add("compare-view");

  const header = document.createElement("div");
  header.className = "compare-header";
  const title = document.createElement("h2");
  title.textContent = "Committees";
  const annealToggle = document.createElement("label");
  annealToggle.className = "anneal-toggle";
  const annealBox = document.createElement("input");
  annealBox.type = "checkbox";
  annealBox.addEventListener("change", () => handlers.toggleAnneal(annealBox.checked));
  annealToggle.append(annealBox, document.createTextNode(" compare with annealing"));
  header.append(title, annealToggle);

  const body = document.createElement("div");
  body.className = "compare-body";

  root.append(header, body);

  function memberCell(member: MemberRow, hues: Map<number, number>): HTMLElement {
    const cell = document.createElement("div");
    cell.className = "member-cell";
    cell.dataset.movieId = String(member.id);
    const hue = hues.get(member.id);
    if (hue !== undefined) cell.classList.add("shared", `shared-${hue}`);

    const titleSpan = document.createElement("span");
    titleSpan.className = "member-title";
    titleSpan.textContent = member.title;
    titleSpan.title = member.genres.join(", ");

    const tfidfSpan = document.createElement("span");
    tfidfSpan.className = "member-tfidf";
    tfidfSpan.textContent = String(member.tfidf);

    const addBtn = document.createElement("button");
    addBtn.type = "button";
    addBtn.className = "add-to-query";
    addBtn.textContent = "+";
    addBtn.title = "add to query";
    addBtn.addEventListener("click", () =>
      handlers.addToQuery({ id: member.id, title: member.title }),
    );

    cell.append(titleSpan, tfidfSpan, addBtn);
    cell.addEventListener("mouseenter", () => {
      for (const other of root.querySelectorAll<HTMLElement>(
        `.member-cell[data-movie-id="${member.id}"]`,
      )) {
        other.classList.add("linked");
      }
    });
    cell.addEventListener("mouseleave", () => {
      for (const other of root.querySelectorAll<HTMLElement>(".member-cell.linked")) {
        other.classList.remove("linked");
      }
    });
    return cell;
  }

  function update(state: SessionState): void {
    const columns = collectColumns(state);
    const hasAnneal = columns.some((c) => c.algo === "anneal");
    annealBox.checked = hasAnneal;
    body.replaceChildren();

    if (columns.length === 0) {
      const empty = document.createElement("p");
      empty.className = "compare-empty";
      empty.textContent = "No results yet. Pick movies and search.";
      body.append(empty);
      return;
    }

    const hues = sharedHues(columns);
    const stops = displayedStops(state);
    const maxRank = Math.max(...columns.map((c) => c.response.members.length));

    const table = document.createElement("table");
    table.className = "compare-table";

    const head = document.createElement("thead");
    const stopRow = document.createElement("tr");
    const rankHead = document.createElement("th");
    rankHead.textContent = "#";
    if (hasAnneal) rankHead.rowSpan = 2;
    stopRow.append(rankHead);
    for (const stop of stops) {
      const th = document.createElement("th");
      th.className = "stop-head";
      th.dataset.p = stop;
      const label = stop === "inf" ? "∞" : stop;
      if (hasAnneal) {
        th.colSpan = columns.filter((c) => c.stop === stop).length;
        th.textContent = `p = ${label}`;
      } else {
        const greedy = state.responses[stop];
        th.textContent = `p = ${label}`;
        if (greedy) {
          const score = document.createElement("span");
          score.className = "column-score";
          score.textContent = `${greedy.algorithm} score ${String(greedy.score)}`;
          th.append(document.createElement("br"), score);
        }
      }
      stopRow.append(th);
    }
    head.append(stopRow);

    if (hasAnneal) {
      const algoRow = document.createElement("tr");
      for (const col of columns) {
        const th = document.createElement("th");
        th.className = "algo-head";
        th.dataset.p = col.stop;
        th.dataset.algo = col.algo;
        const score = document.createElement("span");
        score.className = "column-score";
        score.textContent = `score ${String(col.response.score)}`;
        th.append(document.createTextNode(col.response.algorithm), document.createElement("br"), score);
        algoRow.append(th);
      }
      head.append(algoRow);
    }
    table.append(head);

    const tbody = document.createElement("tbody");
    for (let rank = 0; rank < maxRank; rank++) {
      const tr = document.createElement("tr");
      tr.className = "rank-row";
      const rankCell = document.createElement("td");
      rankCell.className = "rank-cell";
      rankCell.textContent = String(rank + 1);
      tr.append(rankCell);
      for (const col of columns) {
        const td = document.createElement("td");
        td.dataset.p = col.stop;
        td.dataset.algo = col.algo;
        const member = col.response.members[rank];
        if (member) td.append(memberCell(member, hues));
        tr.append(td);
      }
      tbody.append(tr);
    }
    table.append(tbody);

    const scroll = document.createElement("div");
    scroll.className = "compare-scroll";
    scroll.append(table);
    body.append(scroll);
  }

  return { update, element: root };
}
