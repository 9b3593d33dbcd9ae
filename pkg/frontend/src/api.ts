// Typed client for the review service. Every mutating call carries a
// client-generated request id so a retry after a dropped response never
// double-applies.

import type {
  ApiErrorBody,
  AssessmentDoc,
  CandidatesDoc,
  ChainDraft,
  MetricsDoc,
  PromotionResult,
  ResultLine,
  RubricDoc,
  RunDetail,
  RunManifest,
  SessionDoc,
  TrendsDoc,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail?: Record<string, unknown>,
  ) {
    super(message);
  }
}

export function newRequestId(): string {
  if (typeof crypto !== 'undefined' && 'randomUUID' in crypto) {
    return crypto.randomUUID();
  }
  return `req-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

export class ReviewApi {
  constructor(private baseUrl: string = '') {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let body: ApiErrorBody = { code: 'Http', message: `HTTP ${resp.status}` };
      try {
        body = (await resp.json()) as ApiErrorBody;
      } catch {
        // non-JSON error body; keep the fallback
      }
      throw new ApiError(resp.status, body.code, body.message, body.detail);
    }
    if (resp.headers.get('content-type')?.includes('text/plain')) {
      return (await resp.text()) as unknown as T;
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: Record<string, unknown>): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ request_id: newRequestId(), ...body }),
    });
  }

  listRuns(): Promise<RunManifest[]> {
    return this.request('/runs');
  }

  getRun(runId: string): Promise<RunDetail> {
    return this.request(`/runs/${runId}`);
  }

  getResult(runId: string, responseId: string): Promise<ResultLine> {
    return this.request(`/runs/${runId}/results/${responseId}`);
  }

  startRun(body: {
    config: string;
    split: string;
    provider: string;
    allow_unbalanced?: boolean;
    request_id?: string;
  }): Promise<{ job: string }> {
    return this.post('/runs', body);
  }

  getMetrics(runId: string): Promise<MetricsDoc> {
    return this.request(`/runs/${runId}/metrics`);
  }

  getTrends(runId: string): Promise<TrendsDoc> {
    return this.request(`/runs/${runId}/trends`);
  }

  getCandidates(runId: string): Promise<CandidatesDoc> {
    return this.request(`/runs/${runId}/candidates`);
  }

  listSessions(): Promise<SessionDoc[]> {
    return this.request('/irr/sessions');
  }

  openSession(body: {
    assessment: string;
    fraction?: number;
    seed?: number;
    raters?: string[];
    session_id?: string;
  }): Promise<SessionDoc> {
    return this.post('/irr/sessions', body);
  }

  postScores(
    sessionId: string,
    rater: string,
    scores: Record<string, Record<string, number>>,
  ): Promise<SessionDoc> {
    return this.post(`/irr/sessions/${sessionId}/scores`, { rater, scores });
  }

  postResolution(
    sessionId: string,
    body: {
      response: string;
      criterion: string;
      value: number;
      note?: string;
      guideline?: string;
    },
  ): Promise<SessionDoc> {
    return this.post(`/irr/sessions/${sessionId}/resolutions`, body);
  }

  listRubrics(): Promise<RubricDoc[]> {
    return this.request('/rubrics');
  }

  listAssessments(): Promise<AssessmentDoc[]> {
    return this.request('/assessments');
  }

  listConfigs(): Promise<Record<string, string[]>> {
    return this.request('/configs');
  }

  getPrompt(configHash: string): Promise<string> {
    return this.request(`/configs/${configHash}/prompt`);
  }

  promoteExemplar(body: {
    run: string;
    response: string;
    chains: Record<string, ChainDraft>;
    exemplar_id?: string;
    request_id?: string;
  }): Promise<PromotionResult> {
    return this.post('/exemplars/promote', body);
  }
}
