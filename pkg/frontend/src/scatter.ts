/** Embedding scatter: pure spec building + a thin SVG painter. */

import type { EmbeddingPoint } from "./api.js";

export const DOMAIN_COLORS: Record<"sketch" | "view", string> = {
  sketch: "#2e8b57", // green
  view: "#e0a800", // yellow
};

export interface ScatterDot {
  cx: number;
  cy: number;
  color: string;
  label: string;
}

/** Map embedding coordinates into a width x height viewport with a margin. */
export function buildScatter(
  points: EmbeddingPoint[],
  width: number,
  height: number,
  margin = 20,
): ScatterDot[] {
  if (points.length === 0) return [];
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const loX = Math.min(...xs);
  const hiX = Math.max(...xs);
  const loY = Math.min(...ys);
  const hiY = Math.max(...ys);
  const spanX = hiX - loX || 1;
  const spanY = hiY - loY || 1;
  return points.map((p) => ({
    cx: margin + ((p.x - loX) / spanX) * (width - 2 * margin),
    // flip y so larger component values plot upward
    cy: height - margin - ((p.y - loY) / spanY) * (height - 2 * margin),
    color: DOMAIN_COLORS[p.domain],
    label: `${p.id} (${p.class}, ${p.domain})`,
  }));
}

export function renderScatterSvg(container: HTMLElement, points: EmbeddingPoint[]): void {
  const width = 640;
  const height = 480;
  container.innerHTML = "";
  if (points.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No embedding points available.";
    container.appendChild(empty);
    return;
  }
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "scatter");
  for (const dot of buildScatter(points, width, height)) {
    const circle = document.createElementNS("http://www.w3.org/2000/svg", "circle");
    circle.setAttribute("cx", dot.cx.toFixed(2));
    circle.setAttribute("cy", dot.cy.toFixed(2));
    circle.setAttribute("r", "4");
    circle.setAttribute("fill", dot.color);
    const title = document.createElementNS("http://www.w3.org/2000/svg", "title");
    title.textContent = dot.label; // hover label
    circle.appendChild(title);
    svg.appendChild(circle);
  }
  container.appendChild(svg);
}
