/** Polling loop and update submission: single sequential render cycle. */

import { ApiError, ServiceClient } from './api.js';
import {
  applyPollFailure,
  applyPollSuccess,
  ConsoleState,
  initialState,
  validateUpdate,
} from './model.js';

export const POLL_INTERVAL_MS = 2000;

export class Console {
  state: ConsoleState = initialState();

  constructor(
    private client: ServiceClient,
    private runId: string,
  ) {}

  /** One poll cycle; requests are serialized, never overlapping. */
  async poll(): Promise<ConsoleState> {
    try {
      const status = await this.client.getStatus(this.runId);
      let incumbent = null;
      let timeline = null;
      let metrics = null;
      try {
        incumbent = await this.client.getIncumbent(this.runId);
        timeline = await this.client.getTimeline(this.runId);
        metrics = await this.client.getMetrics(this.runId);
      } catch (err) {
        // 404 before the first incumbent exists is a normal early state
        if (!(err instanceof ApiError && err.status === 404)) throw err;
      }
      this.state = applyPollSuccess(this.state, status, incumbent, timeline, metrics);
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      this.state = applyPollFailure(this.state, message);
    }
    return this.state;
  }

  /** Submit a repair-time update; resolves to a user-facing message. */
  async submitUpdate(line: string, hours: number): Promise<string> {
    const problem = validateUpdate(line, hours);
    if (problem) return problem;
    try {
      const res = await this.client.postUpdate(this.runId, line, hours);
      this.state = {
        ...this.state,
        pendingUpdates: [...this.state.pendingUpdates, { line, hours }],
      };
      return res.status === 'duplicate' ? 'already submitted' : 'update queued';
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        return `${line} already repaired`;
      }
      if (err instanceof ApiError) return `rejected: ${err.message}`;
      throw err;
    }
  }

  start(onRender: (state: ConsoleState) => void): () => void {
    let stopped = false;
    const tick = async () => {
      if (stopped) return;
      onRender(await this.poll());
      if (!stopped) setTimeout(tick, POLL_INTERVAL_MS);
    };
    void tick();
    return () => {
      stopped = true;
    };
  }
}
