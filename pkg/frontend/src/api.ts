/** Thin typed client for the annotation service HTTP API. */

import type {
  ApiErrorBody,
  BatchItem,
  GuidelineEntry,
  LabelInfo,
  ProgressInfo,
  Submission,
} from "./types.js";

/** A service response with a {code, message, detail} error body. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail?: unknown,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

async function unwrap<T>(resp: Response): Promise<T> {
  if (resp.ok) {
    return (await resp.json()) as T;
  }
  let body: ApiErrorBody = { code: "unknown", message: resp.statusText };
  try {
    body = (await resp.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(resp.status, body.code, body.message, body.detail);
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    // bind so `this` inside the browser's fetch stays the global scope
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async getBatch(annotator: string, n: number): Promise<BatchItem[]> {
    const query = `annotator=${encodeURIComponent(annotator)}&n=${n}`;
    const resp = await this.fetchFn(this.url(`/api/batch?${query}`));
    const data = await unwrap<{ items: BatchItem[] }>(resp);
    return data.items;
  }

  async submit(submission: Submission): Promise<void> {
    const resp = await this.fetchFn(this.url("/api/annotations"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(submission),
    });
    await unwrap<{ status: string }>(resp);
  }

  async getProgress(annotator: string): Promise<ProgressInfo> {
    const query = `annotator=${encodeURIComponent(annotator)}`;
    const resp = await this.fetchFn(this.url(`/api/progress?${query}`));
    return unwrap<ProgressInfo>(resp);
  }

  async getGuideline(): Promise<GuidelineEntry[]> {
    const resp = await this.fetchFn(this.url("/api/guideline"));
    const data = await unwrap<{ entries: GuidelineEntry[] }>(resp);
    return data.entries;
  }

  async getLabels(): Promise<LabelInfo[]> {
    const resp = await this.fetchFn(this.url("/api/labels"));
    const data = await unwrap<{ labels: LabelInfo[] }>(resp);
    return data.labels;
  }
}
