/** Typed client for the gridmend restoration service (HTTP/JSON only). */

export interface RunStatus {
  id: string;
  scenario: string;
  phase: 'assigning' | 'initial' | 'searching' | 'dispatched' | 'done' | 'failed';
  objective: number | null;
  iterations: number;
  pending_updates: number;
  error: string | null;
}

export interface ItineraryLeg {
  node: string;
  arrival_step: number;
}

export interface Incumbent {
  objective: number;
  iteration: number;
  wall_time: number;
  routes: Record<string, string[]>;
  itineraries: Record<string, ItineraryLeg[]>;
  repairs: { line: string; step: number }[];
}

export interface TimelineRow {
  step: number;
  repaired: string[];
  opened: string[];
  closed: string[];
  pct_served: number;
}

export interface Timeline {
  rows: TimelineRow[];
  csv: string;
}

export interface Metrics {
  objective: number | null;
  kwh_served: number | null;
  restoration_hours: number | null;
  objective_trace: Record<string, number>[];
  objective_csv: string;
  load_served_csv: string;
  event_log: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private base: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && body.detail) detail = String(body.detail);
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  getStatus(runId: string): Promise<RunStatus> {
    return this.request(`/runs/${runId}`);
  }

  getIncumbent(runId: string): Promise<Incumbent> {
    return this.request(`/runs/${runId}/incumbent`);
  }

  getTimeline(runId: string): Promise<Timeline> {
    return this.request(`/runs/${runId}/timeline`);
  }

  getMetrics(runId: string): Promise<Metrics> {
    return this.request(`/runs/${runId}/metrics`);
  }

  postUpdate(runId: string, line: string, hours: number): Promise<{ status: string }> {
    return this.request(`/runs/${runId}/updates`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ line, hours }),
    });
  }

  postDispatchAck(runId: string, crew: string, completed: string[]): Promise<{ status: string }> {
    return this.request(`/runs/${runId}/dispatch`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ crew, completed }),
    });
  }
}
