// Poll an async scoring job until it settles.

import type { ReviewApi } from './api.js';
import type { RunDetail } from './types.js';

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onTick?: (status: string) => void;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export async function waitForRun(
  api: ReviewApi,
  runId: string,
  options: PollOptions = {},
): Promise<RunDetail> {
  const interval = options.intervalMs ?? 250;
  const deadline = Date.now() + (options.timeoutMs ?? 60_000);
  while (Date.now() < deadline) {
    const doc = await api.getRun(runId);
    options.onTick?.(doc.status);
    if (doc.status === 'complete') return doc;
    if (doc.status === 'failed') {
      const reason = doc.job?.error?.message ?? 'job failed';
      throw new Error(`run ${runId} failed: ${reason}`);
    }
    await sleep(interval);
  }
  throw new Error(`run ${runId} did not finish within the timeout`);
}
