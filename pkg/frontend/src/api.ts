// Typed client for the evaluation service. The only configuration is the
// base URL; every displayed number in the UI originates from these payloads.

import type {
  FinalDoc,
  MetricsDoc,
  ReliabilityDoc,
  ReviewDoc,
  RunDoc,
  SweepDoc,
  UncertainPageDoc,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function throwApiError(resp: Response): Promise<never> {
  let code = 'unknown';
  let message = `HTTP ${resp.status}`;
  try {
    const doc = await resp.json();
    if (doc && typeof doc.code === 'string') code = doc.code;
    if (doc && typeof doc.message === 'string') message = doc.message;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async get<T>(path: string, params?: Record<string, string>): Promise<T> {
    const query = params ? `?${new URLSearchParams(params)}` : '';
    const resp = await this.fetchImpl(`${this.baseUrl}${path}${query}`);
    if (!resp.ok) await throwApiError(resp);
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await throwApiError(resp);
    return (await resp.json()) as T;
  }

  getRun(runId: string): Promise<RunDoc> {
    return this.get(`/runs/${runId}`);
  }

  getMetrics(runId: string, threshold?: number): Promise<MetricsDoc> {
    const params = threshold === undefined ? undefined : { threshold: String(threshold) };
    return this.get(`/runs/${runId}/metrics`, params);
  }

  getSweep(runId: string): Promise<SweepDoc> {
    return this.get(`/runs/${runId}/sweep`);
  }

  getReliability(runId: string, threshold?: number): Promise<ReliabilityDoc> {
    const params = threshold === undefined ? undefined : { threshold: String(threshold) };
    return this.get(`/runs/${runId}/reliability`, params);
  }

  getUncertain(
    runId: string,
    options: { threshold?: number; page?: number; pageSize?: number } = {},
  ): Promise<UncertainPageDoc> {
    const params: Record<string, string> = {};
    if (options.threshold !== undefined) params.threshold = String(options.threshold);
    if (options.page !== undefined) params.page = String(options.page);
    params.page_size = String(options.pageSize ?? 500);
    return this.get(`/runs/${runId}/uncertain`, params);
  }

  submitReview(runId: string, sampleId: string, humanLabel: string, reviewer: string): Promise<ReviewDoc> {
    return this.post(`/runs/${runId}/reviews`, {
      sample_id: sampleId,
      human_label: humanLabel,
      reviewer,
    });
  }

  getFinal(runId: string): Promise<FinalDoc> {
    return this.get(`/runs/${runId}/final`);
  }
}
