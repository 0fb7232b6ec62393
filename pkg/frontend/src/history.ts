// Session history of completed runs, kept as immutable payload snapshots
// so earlier results can be re-rendered and compared after re-runs.

import type { JobBody, ParetoPayload } from "./types.js";

export interface RunRecord {
  jobId: string;
  body: JobBody;
  payload: ParetoPayload;
}

export class RunHistory {
  private records: RunRecord[] = [];

  add(record: RunRecord): void {
    this.records.push(record);
  }

  list(): readonly RunRecord[] {
    return this.records;
  }

  get(jobId: string): RunRecord | undefined {
    return this.records.find((r) => r.jobId === jobId);
  }

  get length(): number {
    return this.records.length;
  }
}
