import type { Api } from "./api.js";
import type { JobState } from "./types.js";

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Poll a job until it reaches a terminal state. Resolves with the job on
 * success, rejects when it failed or the timeout elapsed.
 */
export async function pollJob(
  api: Api,
  jobId: string,
  opts: { intervalMs?: number; timeoutMs?: number; onTick?: (state: JobState) => void } = {}
): Promise<JobState> {
  const interval = opts.intervalMs ?? 1000;
  const deadline = Date.now() + (opts.timeoutMs ?? 10 * 60 * 1000);
  for (;;) {
    const state = await api.jobState(jobId);
    opts.onTick?.(state);
    if (state.state === "done") return state;
    if (state.state === "failed") throw new Error(state.error ?? "job failed");
    if (Date.now() > deadline) throw new Error(`job ${jobId} timed out`);
    await sleep(interval);
  }
}
