import type { DatasetInfo, JobBody, JobState, ParetoPayload, RowInfo, SurfacePayload } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let message = resp.statusText;
    try {
      const body = await resp.json();
      if (body && body.message) message = body.message;
    } catch {
      // keep the status text
    }
    throw new ApiError(resp.status, message);
  }
  return (await resp.json()) as T;
}

export class Api {
  constructor(public baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  health(): Promise<{ status: string }> {
    return fetch(this.url("/health")).then((r) => asJson(r));
  }

  datasets(): Promise<DatasetInfo[]> {
    return fetch(this.url("/datasets")).then((r) => asJson(r));
  }

  row(dataset: string, row: number): Promise<RowInfo> {
    return fetch(this.url(`/datasets/${dataset}/rows/${row}`)).then((r) => asJson(r));
  }

  submitJob(body: JobBody): Promise<JobState> {
    return fetch(this.url("/jobs"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson(r));
  }

  jobState(jobId: string): Promise<JobState> {
    return fetch(this.url(`/jobs/${jobId}`)).then((r) => asJson(r));
  }

  pareto(jobId: string, all = false): Promise<ParetoPayload> {
    const suffix = all ? "?all=true" : "";
    return fetch(this.url(`/jobs/${jobId}/pareto${suffix}`)).then((r) => asJson(r));
  }

  surface(body: {
    job?: string;
    dataset?: string;
    row?: number;
    feature_a: string;
    feature_b: string;
    resolution?: number;
  }): Promise<SurfacePayload> {
    return fetch(this.url("/surface"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson(r));
  }
}
