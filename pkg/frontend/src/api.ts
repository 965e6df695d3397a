// Thin fetch client for the service. All reads go through the envelope;
// errors surface as exceptions with the server's message.

import type {
  Envelope,
  HeatmapData,
  HistogramData,
  DistributionData,
  PlacementsData,
  QueryData,
  StreamFrame,
  TeData,
  TermsData,
  TopologyData,
  TypeInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export function buildUrl(base: string, path: string, params: Record<string, string>): string {
  const query = new URLSearchParams(params).toString();
  const root = base.replace(/\/$/, "");
  return query ? `${root}${path}?${query}` : `${root}${path}`;
}

async function unwrap<T>(response: Response): Promise<T> {
  const body = (await response.json()) as Envelope<T>;
  if (body.status !== "ok" || body.data === undefined) {
    const err = body.error ?? { code: "unknown", message: `http ${response.status}` };
    throw new ApiError(err.code, err.message);
  }
  return body.data;
}

export class Client {
  constructor(readonly base: string = "") {}

  private async get<T>(path: string, params: Record<string, string> = {}): Promise<T> {
    const response = await fetch(buildUrl(this.base, path, params));
    return unwrap<T>(response);
  }

  topology(): Promise<TopologyData> {
    return this.get("/topology");
  }

  types(): Promise<TypeInfo[]> {
    return this.get("/types");
  }

  heatmap(params: Record<string, string>): Promise<HeatmapData> {
    return this.get("/heatmap", params);
  }

  histogram(params: Record<string, string>): Promise<HistogramData> {
    return this.get("/histogram", params);
  }

  distribution(params: Record<string, string>): Promise<DistributionData> {
    return this.get("/distribution", params);
  }

  topterms(params: Record<string, string>): Promise<TermsData> {
    return this.get("/topterms", params);
  }

  tfidf(params: Record<string, string>): Promise<TermsData> {
    return this.get("/tfidf", params);
  }

  te(params: Record<string, string>): Promise<TeData> {
    return this.get("/te", params);
  }

  placements(ts: number): Promise<PlacementsData> {
    return this.get("/placements", { ts: String(ts) });
  }

  async query(params: Record<string, string>, limit = 500): Promise<QueryData> {
    const body: Record<string, unknown> = { ...params, limit };
    if (typeof body.start === "string") body.start = Number(body.start);
    if (typeof body.end === "string") body.end = Number(body.end);
    for (const key of ["types", "locations", "users", "apps"]) {
      if (typeof body[key] === "string") body[key] = (body[key] as string).split(",");
    }
    const response = await fetch(buildUrl(this.base, "/query", {}), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return unwrap<QueryData>(response);
  }

  // Server-push channel; falls back to polling where EventSource is missing.
  stream(types: string[], onFrame: (frame: StreamFrame) => void): () => void {
    const params = types.length ? { types: types.join(",") } : {};
    const url = buildUrl(this.base, "/stream", params);
    const source = new EventSource(url);
    source.onmessage = (msg) => onFrame(JSON.parse(msg.data) as StreamFrame);
    return () => source.close();
  }
}
