/** Typed client for the retrieval service API. */

export interface QueryResult {
  model_id: string;
  distance: number;
  view_image_refs: [string, string];
}

export interface QueryResponse {
  results: QueryResult[];
  elapsed_ms: number;
}

export interface EmbeddingPoint {
  id: string;
  domain: "sketch" | "view";
  class: string;
  x: number;
  y: number;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async health(): Promise<boolean> {
    try {
      const res = await this.fetchFn(this.url("/api/health"));
      return res.ok;
    } catch {
      return false;
    }
  }

  /** Submit a query sketch; results arrive already ranked — never reorder. */
  async query(imagePngBase64: string, k = 15, signal?: AbortSignal): Promise<QueryResponse> {
    const res = await this.fetchFn(this.url("/api/query"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ image_png_base64: imagePngBase64, k }),
      signal,
    });
    if (!res.ok) {
      throw new Error(`query failed: HTTP ${res.status}`);
    }
    return (await res.json()) as QueryResponse;
  }

  /** 2D embedding of the gallery; null when the endpoint is absent (tab hides). */
  async embedding(): Promise<EmbeddingPoint[] | null> {
    const res = await this.fetchFn(this.url("/api/embedding"));
    if (res.status === 404) return null;
    if (!res.ok) throw new Error(`embedding failed: HTTP ${res.status}`);
    return (await res.json()) as EmbeddingPoint[];
  }

  viewImageUrl(ref: string): string {
    return ref.startsWith("http") ? ref : this.url(ref);
  }
}

/** Service base URL: ?api=... query parameter wins, then config.json, then
 * same-origin. */
export async function resolveBaseUrl(
  search: string,
  fetchFn: typeof fetch = fetch,
): Promise<string> {
  const fromQuery = new URLSearchParams(search).get("api");
  if (fromQuery) return fromQuery;
  try {
    const res = await fetchFn("config.json");
    if (res.ok) {
      const cfg = (await res.json()) as { api?: string };
      if (cfg.api) return cfg.api;
    }
  } catch {
    // no config file shipped; fall through
  }
  return "";
}
