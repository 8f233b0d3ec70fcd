/** Sketchpad app wiring: draw, query, inspect, refine. */

import { ApiClient, resolveBaseUrl } from "./api.js";
import { renderResultGrid } from "./grid.js";
import { encodeGrayPng, toBase64 } from "./png.js";
import { renderScatterSvg } from "./scatter.js";
import {
  BRUSH_WIDTH,
  EXPORT_SIZE,
  PAD_SIZE,
  StrokeModel,
  downsampleToGray,
  rasterize,
} from "./stroke.js";

const TOP_K = 15;
const LIVE_QUERY_DELAY_MS = 600;

function mustGet<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient(await resolveBaseUrl(location.search));
  const canvas = mustGet<HTMLCanvasElement>("pad");
  const ctx = canvas.getContext("2d")!;
  const model = new StrokeModel();
  const queryButton = mustGet<HTMLButtonElement>("query-btn");
  const undoButton = mustGet<HTMLButtonElement>("undo-btn");
  const clearButton = mustGet<HTMLButtonElement>("clear-btn");
  const liveToggle = mustGet<HTMLInputElement>("live-toggle");
  const banner = mustGet<HTMLDivElement>("banner");
  const grid = mustGet<HTMLDivElement>("results");
  const elapsed = mustGet<HTMLSpanElement>("elapsed");
  const embeddingTabButton = mustGet<HTMLButtonElement>("tab-embedding");
  const sketchPane = mustGet<HTMLDivElement>("pane-sketch");
  const embeddingPane = mustGet<HTMLDivElement>("pane-embedding");

  let inflight: AbortController | null = null;
  let liveTimer: number | undefined;

  function repaint(): void {
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, PAD_SIZE, PAD_SIZE);
    ctx.strokeStyle = "#111111";
    ctx.lineWidth = BRUSH_WIDTH;
    ctx.lineCap = "round";
    ctx.lineJoin = "round";
    for (const stroke of model.all()) {
      if (stroke.length === 0) continue;
      ctx.beginPath();
      ctx.moveTo(stroke[0].x, stroke[0].y);
      for (const p of stroke.slice(1)) ctx.lineTo(p.x, p.y);
      ctx.stroke();
    }
    queryButton.disabled = model.isEmpty;
  }

  function exportPngBase64(): string {
    const gray = downsampleToGray(rasterize(model.all()), PAD_SIZE, EXPORT_SIZE);
    return toBase64(encodeGrayPng(gray, EXPORT_SIZE, EXPORT_SIZE));
  }

  async function submit(): Promise<void> {
    if (model.isEmpty) return;
    inflight?.abort(); // at most one in-flight query
    inflight = new AbortController();
    try {
      const response = await api.query(exportPngBase64(), TOP_K, inflight.signal);
      banner.hidden = true;
      renderResultGrid(grid, response.results, api);
      elapsed.textContent = `${response.elapsed_ms.toFixed(1)} ms`;
    } catch (err) {
      if ((err as Error).name === "AbortError") return;
      // keep previous results on screen; just surface the failure
      banner.textContent = `Query failed: ${(err as Error).message}`;
      banner.hidden = false;
    }
  }

  function penUp(): void {
    model.end();
    repaint();
    if (liveToggle.checked && !model.isEmpty) {
      window.clearTimeout(liveTimer);
      liveTimer = window.setTimeout(submit, LIVE_QUERY_DELAY_MS);
    }
  }

  let drawing = false;
  canvas.addEventListener("pointerdown", (e) => {
    drawing = true;
    canvas.setPointerCapture(e.pointerId);
    const r = canvas.getBoundingClientRect();
    model.begin(e.clientX - r.left, e.clientY - r.top);
    repaint();
  });
  canvas.addEventListener("pointermove", (e) => {
    if (!drawing) return;
    const r = canvas.getBoundingClientRect();
    model.extend(e.clientX - r.left, e.clientY - r.top);
    repaint();
  });
  canvas.addEventListener("pointerup", () => {
    drawing = false;
    penUp();
  });

  undoButton.addEventListener("click", () => {
    model.undo();
    repaint();
  });
  clearButton.addEventListener("click", () => {
    model.clear();
    repaint();
  });
  queryButton.addEventListener("click", submit);

  // embedding tab: hidden unless the endpoint exists
  try {
    const points = await api.embedding();
    if (points === null) {
      embeddingTabButton.hidden = true;
    } else {
      embeddingTabButton.addEventListener("click", () => {
        sketchPane.hidden = true;
        embeddingPane.hidden = false;
        renderScatterSvg(embeddingPane, points);
      });
      mustGet<HTMLButtonElement>("tab-sketch").addEventListener("click", () => {
        embeddingPane.hidden = true;
        sketchPane.hidden = false;
      });
    }
  } catch {
    embeddingTabButton.hidden = true;
  }

  repaint();
}

boot().catch((err) => {
  document.body.insertAdjacentText("afterbegin", `failed to start: ${err}`);
});
