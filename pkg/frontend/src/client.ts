// Thin HTTP client for the scenario service. The fetch implementation is
// injectable so tests can serve captured fixtures without a network.

import {
  DistributionRequest,
  DistributionResponse,
  PredictRequest,
  PredictResponse,
  RobustnessRequest,
  RobustnessResponse,
  SensitivityResponse,
  SpaceResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    return this.decode<T>(resp);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.decode<T>(resp);
  }

  private async decode<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: unknown };
        if (body.detail !== undefined) {
          detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(detail, resp.status);
    }
    return (await resp.json()) as T;
  }

  getSpace(): Promise<SpaceResponse> {
    return this.get("/api/space");
  }

  predict(req: PredictRequest): Promise<PredictResponse> {
    return this.post("/api/predict", req);
  }

  distribution(req: DistributionRequest): Promise<DistributionResponse> {
    return this.post("/api/distribution", req);
  }

  robustness(req: RobustnessRequest): Promise<RobustnessResponse> {
    return this.post("/api/robustness", req);
  }

  sensitivity(output: string, year: number, region = "global", m?: number): Promise<SensitivityResponse> {
    const params = new URLSearchParams({ output, year: String(year), region });
    if (m !== undefined) {
      params.set("m", String(m));
    }
    return this.get(`/api/sensitivity?${params.toString()}`);
  }
}
