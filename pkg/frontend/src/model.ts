/** View-model state: poll bookkeeping, staleness, CSV parsing, validation. */

import type { Incumbent, Metrics, RunStatus, Timeline } from './api.js';

export const STALE_AFTER_MISSES = 2;

export interface ChartPoint {
  step: number;
  pct: number;
  kw: number;
}

export interface TracePoint {
  iteration: number;
  objective: number;
}

export interface ConsoleState {
  status: RunStatus | null;
  incumbent: Incumbent | null;
  timeline: Timeline | null;
  metrics: Metrics | null;
  missedPolls: number;
  stale: boolean;
  banner: string | null;
  pendingUpdates: { line: string; hours: number }[];
}

export function initialState(): ConsoleState {
  return {
    status: null,
    incumbent: null,
    timeline: null,
    metrics: null,
    missedPolls: 0,
    stale: false,
    banner: null,
    pendingUpdates: [],
  };
}

export function applyPollSuccess(
  state: ConsoleState,
  status: RunStatus,
  incumbent: Incumbent | null,
  timeline: Timeline | null,
  metrics: Metrics | null,
): ConsoleState {
  const next = { ...state, status, missedPolls: 0, stale: false, banner: null };
  if (incumbent) {
    next.incumbent = incumbent;
    // submitted updates stay marked pending until the service has none queued
    if ((status.pending_updates ?? 0) === 0) next.pendingUpdates = [];
  }
  if (timeline) next.timeline = timeline;
  if (metrics) next.metrics = metrics;
  return next;
}

export function applyPollFailure(state: ConsoleState, message: string): ConsoleState {
  const missedPolls = state.missedPolls + 1;
  return {
    ...state,
    missedPolls,
    // retain the last snapshot; flag it once two polls in a row are missed
    stale: missedPolls >= STALE_AFTER_MISSES,
    banner: `connection lost: ${message}`,
  };
}

/** Client-side gate for the update form; the service enforces it again. */
export function validateUpdate(line: string, hours: number): string | null {
  if (!line.trim()) return 'line id is required';
  if (!Number.isFinite(hours) || hours <= 0) {
    return 'repair hours must be a positive number';
  }
  return null;
}

/** Parse the load-served CSV (`step,pct_served,kw_served`) point-for-point. */
export function parseLoadServedCsv(csv: string): ChartPoint[] {
  const lines = csv.trim().split('\n');
  if (lines[0] !== 'step,pct_served,kw_served') {
    throw new Error(`unexpected load-served header: ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const [step, pct, kw] = line.split(',');
    return { step: Number(step), pct: Number(pct), kw: Number(kw) };
  });
}

/** Parse the objective trace CSV (`iteration,sample_size,stall,objective,wall`). */
export function parseObjectiveCsv(csv: string): TracePoint[] {
  const lines = csv.trim().split('\n');
  if (!lines[0].startsWith('iteration,')) {
    throw new Error(`unexpected trace header: ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const cols = line.split(',');
    return { iteration: Number(cols[0]), objective: Number(cols[3]) };
  });
}
