/** Thin typed client for the review API. */

import type {
  AgreementSummary, Decision, NextPairResponse, Progress, VerdictSubmission,
} from './types';

/** Server rejected the request (4xx/5xx); not a connectivity problem. */
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  constructor(
    private readonly base: string = '',
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    if (!res.ok) {
      let detail = `HTTP ${res.status}`;
      try {
        const body = (await res.json()) as { error?: string };
        if (body.error) detail = body.error;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return res.json() as Promise<T>;
  }

  nextPair(annotator: string): Promise<NextPairResponse> {
    return this.request(`/pairs/next?annotator=${encodeURIComponent(annotator)}`);
  }

  submitVerdict(v: VerdictSubmission): Promise<{ ok: boolean; pair_key: string; decision: Decision }> {
    return this.request('/verdicts', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(v),
    });
  }

  progress(annotator?: string): Promise<Progress> {
    const q = annotator ? `?annotator=${encodeURIComponent(annotator)}` : '';
    return this.request(`/progress${q}`);
  }

  agreement(): Promise<AgreementSummary> {
    return this.request('/agreement');
  }

  artifact<T>(name: string): Promise<T> {
    return this.request(`/artifacts/${name}`);
  }
}
