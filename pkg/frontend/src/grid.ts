/** Result grid: cards in exactly the order the service returned them. */

import type { ApiClient, QueryResult } from "./api.js";

export function renderResultGrid(
  container: HTMLElement,
  results: QueryResult[],
  api: ApiClient,
): void {
  container.innerHTML = "";
  if (results.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No results.";
    container.appendChild(empty);
    return;
  }
  for (const result of results) {
    const card = document.createElement("div");
    card.className = "card";
    const title = document.createElement("div");
    title.className = "card-title";
    title.textContent = result.model_id;
    const distance = document.createElement("div");
    distance.className = "card-distance";
    distance.textContent = `d = ${result.distance.toFixed(4)}`; // verbatim score
    const views = document.createElement("div");
    views.className = "card-views";
    for (const ref of result.view_image_refs) {
      const img = document.createElement("img");
      img.src = api.viewImageUrl(ref);
      img.alt = `${result.model_id} view`;
      img.width = 100;
      img.height = 100;
      views.appendChild(img);
    }
    card.append(title, views, distance);
    container.appendChild(card);
  }
}
