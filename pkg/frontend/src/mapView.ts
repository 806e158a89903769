/**
 * Embedding map: a pannable, zoomable SVG scatter of the extension
 * neighborhood around the query. Nodes are colored by first genre,
 * committee members of the active diversity stop get a ring marker,
 * hovering reveals the title plus the closest neighbors by the
 * service-reported dissimilarity, and clicking a node offers it to the
 * query set.
 *
 * The view keeps the last embedding around so switching the active
 * stop only redraws the rings. It never talks to the network itself.
 */

import type { EmbeddingNode, EmbeddingResponse } from "./api.js";
import type { MapViewState, PStop } from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const SIZE = 600;
const MARGIN = 40;
const NODE_RADIUS = 6;
const RING_GAP = 4;
const MAX_DRAWN_EDGES = 300;
const NEIGHBOR_COUNT = 3;

const PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#e15759",
  "#76b7b2",
  "#59a14f",
  "#edc948",
  "#b07aa1",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
];

export interface MapViewHandlers {
  addToQuery(movie: { id: number; title: string }): void;
  viewChanged(view: MapViewState): void;
}

export interface MapView {
  render(embedding: EmbeddingResponse, activeP: PStop, view: MapViewState): void;
  setActiveP(p: PStop): void;
  setView(view: MapViewState): void;
  showCapError(message: string): void;
  clear(): void;
  readonly element: HTMLElement;
}

function toPixel(coord: number): number {
  return MARGIN + coord * (SIZE - 2 * MARGIN);
}

export function createMapView(root: HTMLElement, handlers: MapViewHandlers): MapView {
  root.classList.add("map-view");

  const heading = document.createElement("h2");
  heading.textContent = "Map";

  const note = document.createElement("div");
  note.className = "map-note";
  note.hidden = true;

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${SIZE} ${SIZE}`);
  svg.setAttribute("class", "map-svg");
  const world = document.createElementNS(SVG_NS, "g");
  world.setAttribute("class", "map-world");
  const edgeLayer = document.createElementNS(SVG_NS, "g");
  const ringLayer = document.createElementNS(SVG_NS, "g");
  const nodeLayer = document.createElementNS(SVG_NS, "g");
  world.append(edgeLayer, ringLayer, nodeLayer);
  svg.append(world);

  const tooltip = document.createElement("div");
  tooltip.className = "map-tooltip";
  tooltip.hidden = true;

  const legend = document.createElement("div");
  legend.className = "map-legend";

  root.append(heading, note, svg, tooltip, legend);

  let embedding: EmbeddingResponse | null = null;
  let activeP: PStop = "0";
  let view: MapViewState = { panX: 0, panY: 0, zoom: 1, hovered: null };
  let nodeById = new Map<number, EmbeddingNode>();
  let genreColor = new Map<string, string>();

  function applyTransform(): void {
    world.setAttribute(
      "transform",
      `translate(${view.panX} ${view.panY}) scale(${view.zoom})`,
    );
  }

  function colorFor(genre: string): string {
    let color = genreColor.get(genre);
    if (color === undefined) {
      color = PALETTE[genreColor.size % PALETTE.length] as string;
      genreColor.set(genre, color);
    }
    return color;
  }

  /** Closest neighbors of a node by reported dissimilarity, ascending. */
  function neighborsOf(id: number): { node: EmbeddingNode; diss: number }[] {
    if (!embedding) return [];
    const incident: { other: number; diss: number }[] = [];
    for (const e of embedding.edges) {
      if (e.a === id) incident.push({ other: e.b, diss: e.diss });
      else if (e.b === id) incident.push({ other: e.a, diss: e.diss });
    }
    incident.sort((u, v) => u.diss - v.diss);
    const out: { node: EmbeddingNode; diss: number }[] = [];
    for (const { other, diss } of incident.slice(0, NEIGHBOR_COUNT)) {
      const node = nodeById.get(other);
      if (node) out.push({ node, diss });
    }
    return out;
  }

  function ringedIds(): Set<number> {
    const ids = new Set<number>();
    if (!embedding) return ids;
    for (const cell of embedding.committees) {
      if (cell.p === activeP) {
        for (const m of cell.members) ids.add(m);
      }
    }
    return ids;
  }

  function drawRings(): void {
    ringLayer.replaceChildren();
    const ids = ringedIds();
    for (const id of ids) {
      const node = nodeById.get(id);
      if (!node) continue;
      const ring = document.createElementNS(SVG_NS, "circle");
      ring.setAttribute("class", "committee-ring");
      ring.setAttribute("data-id", String(id));
      ring.setAttribute("cx", String(toPixel(node.x)));
      ring.setAttribute("cy", String(toPixel(node.y)));
      ring.setAttribute("r", String(NODE_RADIUS + RING_GAP));
      ring.setAttribute("fill", "none");
      ring.setAttribute("stroke", "#111");
      ring.setAttribute("stroke-width", "2");
      ringLayer.append(ring);
    }
  }

  function showTooltip(node: EmbeddingNode, clientX: number, clientY: number): void {
    tooltip.replaceChildren();
    const name = document.createElement("div");
    name.className = "tooltip-title";
    name.textContent = node.title;
    const genre = document.createElement("div");
    genre.className = "tooltip-genre";
    genre.textContent = node.genre;
    tooltip.append(name, genre);
    const near = neighborsOf(node.id);
    if (near.length > 0) {
      const list = document.createElement("ul");
      list.className = "tooltip-neighbors";
      for (const { node: other, diss } of near) {
        const li = document.createElement("li");
        li.textContent = `${other.title} (${String(diss)})`;
        list.append(li);
      }
      tooltip.append(list);
    }
    tooltip.style.left = `${clientX + 12}px`;
    tooltip.style.top = `${clientY + 12}px`;
    tooltip.hidden = false;
  }

  function drawNodes(): void {
    nodeLayer.replaceChildren();
    if (!embedding) return;
    for (const node of embedding.nodes) {
      const circle = document.createElementNS(SVG_NS, "circle");
      circle.setAttribute("class", "map-node");
      circle.setAttribute("data-id", String(node.id));
      circle.setAttribute("cx", String(toPixel(node.x)));
      circle.setAttribute("cy", String(toPixel(node.y)));
      circle.setAttribute("r", String(NODE_RADIUS));
      circle.setAttribute("fill", colorFor(node.genre));
      circle.addEventListener("mouseenter", (ev) => {
        const mouse = ev as MouseEvent;
        showTooltip(node, mouse.clientX ?? 0, mouse.clientY ?? 0);
        view = { ...view, hovered: node.id };
        handlers.viewChanged(view);
      });
      circle.addEventListener("mouseleave", () => {
        tooltip.hidden = true;
        view = { ...view, hovered: null };
        handlers.viewChanged(view);
      });
      circle.addEventListener("click", () => {
        handlers.addToQuery({ id: node.id, title: node.title });
      });
      nodeLayer.append(circle);
    }
  }

  function drawEdges(): void {
    edgeLayer.replaceChildren();
    if (!embedding || embedding.edges.length > MAX_DRAWN_EDGES) return;
    for (const e of embedding.edges) {
      const a = nodeById.get(e.a);
      const b = nodeById.get(e.b);
      if (!a || !b) continue;
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("class", "map-edge");
      line.setAttribute("x1", String(toPixel(a.x)));
      line.setAttribute("y1", String(toPixel(a.y)));
      line.setAttribute("x2", String(toPixel(b.x)));
      line.setAttribute("y2", String(toPixel(b.y)));
      edgeLayer.append(line);
    }
  }

  function drawLegend(): void {
    legend.replaceChildren();
    for (const [genre, color] of genreColor) {
      const item = document.createElement("span");
      item.className = "legend-item";
      const swatch = document.createElement("span");
      swatch.className = "legend-swatch";
      swatch.style.background = color;
      item.append(swatch, document.createTextNode(` ${genre}`));
      legend.append(item);
    }
  }

  // Pan by dragging, zoom around the cursor with the wheel.
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  svg.addEventListener("mousedown", (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
  });
  svg.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    view = { ...view, panX: view.panX + (ev.clientX - lastX), panY: view.panY + (ev.clientY - lastY) };
    lastX = ev.clientX;
    lastY = ev.clientY;
    applyTransform();
  });
  const endDrag = () => {
    if (!dragging) return;
    dragging = false;
    handlers.viewChanged(view);
  };
  svg.addEventListener("mouseup", endDrag);
  svg.addEventListener("mouseleave", endDrag);
  svg.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY < 0 ? 1.2 : 1 / 1.2;
    const zoom = Math.min(16, Math.max(0.25, view.zoom * factor));
    const cx = ev.offsetX ?? SIZE / 2;
    const cy = ev.offsetY ?? SIZE / 2;
    // Keep the point under the cursor fixed while the scale changes.
    const ratio = zoom / view.zoom;
    view = {
      ...view,
      zoom,
      panX: cx - (cx - view.panX) * ratio,
      panY: cy - (cy - view.panY) * ratio,
    };
    applyTransform();
    handlers.viewChanged(view);
  });

  function render(data: EmbeddingResponse, p: PStop, initialView: MapViewState): void {
    embedding = data;
    activeP = p;
    view = { ...initialView };
    nodeById = new Map(data.nodes.map((n) => [n.id, n]));
    genreColor = new Map();
    note.hidden = true;
    note.textContent = "";
    drawEdges();
    drawNodes();
    drawRings();
    drawLegend();
    applyTransform();
  }

  function setActiveP(p: PStop): void {
    activeP = p;
    drawRings();
  }

  function setView(next: MapViewState): void {
    view = { ...next };
    applyTransform();
  }

  function showCapError(message: string): void {
    embedding = null;
    nodeById = new Map();
    edgeLayer.replaceChildren();
    ringLayer.replaceChildren();
    nodeLayer.replaceChildren();
    legend.replaceChildren();
    note.textContent = `${message}. Remove some query movies and try again.`;
    note.hidden = false;
  }

  function clear(): void {
    embedding = null;
    nodeById = new Map();
    edgeLayer.replaceChildren();
    ringLayer.replaceChildren();
    nodeLayer.replaceChildren();
    legend.replaceChildren();
    tooltip.hidden = true;
    note.hidden = true;
  }

  return { render, setActiveP, setView, showCapError, clear, element: root };
}
