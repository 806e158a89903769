/**
 * Query panel: typeahead picker, query chips, diversity stops and the
 * search controls. Owns no state; everything flows through callbacks
 * and update() so the controller in main.ts stays the single writer.
 */

import type { MovieRow } from "./api.js";
import { P_STOPS, type SessionState } from "./state.js";

const TYPEAHEAD_DEBOUNCE_MS = 150;
const STOP_LABELS: Record<string, string> = { inf: "∞" };

export interface QueryPanelHandlers {
  typeahead(q: string): Promise<MovieRow[]>;
  addMovie(movie: { id: number; title: string }): void;
  removeMovie(id: number): void;
  setP(p: SessionState["p"]): void;
  setK(k: number): void;
  search(): void;
  sweep(): void;
  loadMap(): void;
}

export interface QueryPanel {
  update(state: SessionState): void;
  showError(message: string, retry: () => void): void;
  clearError(): void;
  readonly element: HTMLElement;
}

export function createQueryPanel(root: HTMLElement, handlers: QueryPanelHandlers): QueryPanel {
  root.classList.add("query-panel");

  const pickerWrap = document.createElement("div");
  pickerWrap.className = "picker";
  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = "Type a movie title";
  input.className = "typeahead-input";
  const dropdown = document.createElement("ul");
  dropdown.className = "typeahead-list";
  dropdown.hidden = true;
  pickerWrap.append(input, dropdown);

  const chips = document.createElement("div");
  chips.className = "chips";

  const stopsRow = document.createElement("div");
  stopsRow.className = "p-stops";
  const focusedLabel = document.createElement("span");
  focusedLabel.className = "p-end-label";
  focusedLabel.textContent = "Focused";
  stopsRow.append(focusedLabel);
  const stopButtons = new Map<string, HTMLButtonElement>();
  for (const stop of P_STOPS) {
    const btn = document.createElement("button");
    btn.type = "button";
    btn.className = "p-stop";
    btn.dataset.p = stop;
    btn.textContent = STOP_LABELS[stop] ?? stop;
    btn.addEventListener("click", () => handlers.setP(stop));
    stopButtons.set(stop, btn);
    stopsRow.append(btn);
  }
  const broadLabel = document.createElement("span");
  broadLabel.className = "p-end-label";
  broadLabel.textContent = "Broad";
  stopsRow.append(broadLabel);

  const controls = document.createElement("div");
  controls.className = "controls";
  const kLabel = document.createElement("label");
  kLabel.textContent = "k ";
  const kInput = document.createElement("input");
  kInput.type = "number";
  kInput.min = "1";
  kInput.className = "k-input";
  kInput.addEventListener("change", () => {
    const k = Number(kInput.value);
    if (Number.isInteger(k) && k >= 1) handlers.setK(k);
  });
  kLabel.append(kInput);

  const searchBtn = document.createElement("button");
  searchBtn.type = "button";
  searchBtn.className = "search-btn";
  searchBtn.textContent = "Search";
  searchBtn.addEventListener("click", () => handlers.search());

  const sweepBtn = document.createElement("button");
  sweepBtn.type = "button";
  sweepBtn.className = "sweep-btn";
  sweepBtn.textContent = "Compare p levels";
  sweepBtn.addEventListener("click", () => handlers.sweep());

  const mapBtn = document.createElement("button");
  mapBtn.type = "button";
  mapBtn.className = "map-btn";
  mapBtn.textContent = "Load map";
  mapBtn.addEventListener("click", () => handlers.loadMap());

  controls.append(kLabel, searchBtn, sweepBtn, mapBtn);

  const errorBox = document.createElement("div");
  errorBox.className = "panel-error";
  errorBox.hidden = true;

  root.append(pickerWrap, chips, stopsRow, controls, errorBox);

  let debounceTimer: ReturnType<typeof setTimeout> | null = null;
  let typeaheadSeq = 0;

  function closeDropdown(): void {
    dropdown.hidden = true;
    dropdown.replaceChildren();
  }

  async function runTypeahead(q: string): Promise<void> {
    const seq = ++typeaheadSeq;
    let rows: MovieRow[];
    try {
      rows = await handlers.typeahead(q);
    } catch {
      return; // suggestion lookups fail silently, search errors do not
    }
    if (seq !== typeaheadSeq) return; // a newer keystroke superseded this one
    dropdown.replaceChildren();
    for (const row of rows) {
      const item = document.createElement("li");
      item.className = "typeahead-item";
      item.dataset.id = String(row.id);
      const approvals = document.createElement("span");
      approvals.className = "typeahead-approvals";
      approvals.textContent = String(row.global_approvals);
      item.append(document.createTextNode(row.title + " "), approvals);
      item.addEventListener("click", () => {
        handlers.addMovie({ id: row.id, title: row.title });
        input.value = "";
        closeDropdown();
      });
      dropdown.append(item);
    }
    dropdown.hidden = rows.length === 0;
  }

  input.addEventListener("input", () => {
    const q = input.value.trim();
    if (debounceTimer !== null) clearTimeout(debounceTimer);
    if (q === "") {
      closeDropdown();
      return;
    }
    debounceTimer = setTimeout(() => void runTypeahead(q), TYPEAHEAD_DEBOUNCE_MS);
  });
  input.addEventListener("keydown", (ev) => {
    if (ev.key === "Escape") closeDropdown();
  });

  function update(state: SessionState): void {
    chips.replaceChildren();
    for (const movie of state.query) {
      const chip = document.createElement("span");
      chip.className = "chip";
      chip.dataset.id = String(movie.id);
      chip.textContent = movie.title;
      const remove = document.createElement("button");
      remove.type = "button";
      remove.className = "chip-remove";
      remove.textContent = "×";
      remove.setAttribute("aria-label", `remove ${movie.title}`);
      remove.addEventListener("click", () => handlers.removeMovie(movie.id));
      chip.append(remove);
      chips.append(chip);
    }
    for (const [stop, btn] of stopButtons) {
      btn.setAttribute("aria-pressed", stop === state.p ? "true" : "false");
      btn.classList.toggle("active", stop === state.p);
    }
    kInput.value = String(state.k);
    const empty = state.query.length === 0;
    searchBtn.disabled = empty;
    sweepBtn.disabled = empty;
    mapBtn.disabled = empty;
  }

  function showError(message: string, retry: () => void): void {
    errorBox.replaceChildren();
    const text = document.createElement("span");
    text.className = "panel-error-text";
    text.textContent = message;
    const retryBtn = document.createElement("button");
    retryBtn.type = "button";
    retryBtn.className = "retry-btn";
    retryBtn.textContent = "Retry";
    retryBtn.addEventListener("click", () => {
      clearError();
      retry();
    });
    errorBox.append(text, retryBtn);
    errorBox.hidden = false;
  }

  function clearError(): void {
    errorBox.hidden = true;
    errorBox.replaceChildren();
  }

  return { update, showError, clearError, element: root };
}
