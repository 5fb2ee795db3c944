/** Thin typed client for the engine's HTTP API.
 *
 * The console performs no clinical computation: every number it renders
 * comes out of one of these calls.
 */

import type {
  Catalog,
  OffloadReportDoc,
  PeakGridDoc,
  ProfileDoc,
  RecommendationDoc,
  TrialDoc,
  ValidationReportDoc,
  WhatIfResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : response.statusText;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export interface RecommendRequest {
  profile?: ProfileDoc;
  profile_id?: string;
  ruleset_id?: string;
  model_ids?: Record<string, string>;
  policy?: { threshold?: number; defaults?: Record<string, string> };
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  getCatalog(): Promise<Catalog> {
    return request(this.url("/catalog"));
  }

  validateProfile(profile: ProfileDoc, mode: "strict" | "partial" = "partial"):
      Promise<ValidationReportDoc> {
    return request(this.url("/profiles/validate"), {
      method: "POST",
      body: JSON.stringify({ profile, mode }),
    });
  }

  recommend(req: RecommendRequest): Promise<RecommendationDoc> {
    return request(this.url("/recommend"), {
      method: "POST",
      body: JSON.stringify(req),
    });
  }

  whatIf(req: RecommendRequest & { overrides: Record<string, string[] | string> }):
      Promise<WhatIfResponse> {
    return request(this.url("/whatif"), {
      method: "POST",
      body: JSON.stringify(req),
    });
  }

  comparePressure(payload: Record<string, unknown>): Promise<OffloadReportDoc> {
    return request(this.url("/pressure/compare"), {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }

  getRecordingGrid(recordingId: string): Promise<PeakGridDoc> {
    return request(this.url(`/pressure/recordings/${recordingId}/grid`));
  }

  getTrial(trialId: string): Promise<TrialDoc> {
    return request(this.url(`/trials/${trialId}`));
  }

  postTrialEvent(trialId: string, payload: Record<string, unknown>): Promise<TrialDoc> {
    return request(this.url(`/trials/${trialId}/events`), {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }
}
