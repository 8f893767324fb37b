/** Thin client over the diagnosis service JSON API. */

import type { Prediction, Recommendation } from "./types.js";

export const MAX_UPLOAD_BYTES = 10 * 1024 * 1024;

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function throwServiceError(resp: Response): Promise<never> {
  let code = "unknown";
  let message = `service returned ${resp.status}`;
  try {
    const body = await resp.json();
    if (body?.detail?.code) {
      code = body.detail.code;
      message = body.detail.message ?? message;
    }
  } catch {
    // non-JSON error body; keep defaults
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base = "",
  ) {}

  async predict(blob: Blob, filename = "leaf.jpg"): Promise<Prediction> {
    const form = new FormData();
    form.append("file", blob, filename);
    const resp = await this.fetchFn(`${this.base}/predict`, {
      method: "POST",
      body: form,
    });
    if (!resp.ok) await throwServiceError(resp);
    return (await resp.json()) as Prediction;
  }

  async classes(): Promise<string[]> {
    const resp = await this.fetchFn(`${this.base}/classes`);
    if (!resp.ok) await throwServiceError(resp);
    return (await resp.json()) as string[];
  }

  async recommend(disease: string): Promise<Recommendation> {
    const resp = await this.fetchFn(`${this.base}/recommend`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ disease }),
    });
    if (!resp.ok) await throwServiceError(resp);
    return (await resp.json()) as Recommendation;
  }
}
