import { describe, expect, it } from 'vitest';

import {
  applyPollFailure,
  applyPollSuccess,
  initialState,
  parseLoadServedCsv,
  parseObjectiveCsv,
  STALE_AFTER_MISSES,
  validateUpdate,
} from '../src/model.js';
import type { Incumbent, RunStatus } from '../src/api.js';

const status: RunStatus = {
  id: 'run-1',
  scenario: 'sc-1',
  phase: 'done',
  objective: 7304,
  iterations: 2,
  pending_updates: 0,
  error: null,
};

const incumbent: Incumbent = {
  objective: 7304,
  iteration: 1,
  wall_time: 0.5,
  routes: { c1: ['D', 'L2', 'D'] },
  itineraries: { c1: [{ node: 'L2', arrival_step: 1 }] },
  repairs: [{ line: 'L2', step: 3 }],
};

describe('poll state', () => {
  it('marks data stale only after two missed polls', () => {
    let s = applyPollSuccess(initialState(), status, incumbent, null, null);
    expect(s.stale).toBe(false);
    s = applyPollFailure(s, 'boom');
    expect(s.stale).toBe(false);
    expect(s.banner).toContain('connection lost');
    s = applyPollFailure(s, 'boom');
    expect(s.missedPolls).toBe(STALE_AFTER_MISSES);
    expect(s.stale).toBe(true);
    // last snapshot is retained through the outage
    expect(s.incumbent).toEqual(incumbent);
  });

  it('recovers from staleness on the next good poll', () => {
    let s = applyPollFailure(applyPollFailure(initialState(), 'x'), 'x');
    expect(s.stale).toBe(true);
    s = applyPollSuccess(s, status, incumbent, null, null);
    expect(s.stale).toBe(false);
    expect(s.banner).toBeNull();
  });

  it('clears pending updates once the service queue is empty', () => {
    let s = { ...initialState(), pendingUpdates: [{ line: 'L2', hours: 3 }] };
    s = applyPollSuccess(s, { ...status, pending_updates: 1 }, incumbent, null, null);
    expect(s.pendingUpdates).toHaveLength(1);
    s = applyPollSuccess(s, { ...status, pending_updates: 0 }, incumbent, null, null);
    expect(s.pendingUpdates).toHaveLength(0);
  });
});

describe('update validation', () => {
  it('rejects non-positive hours client-side', () => {
    expect(validateUpdate('L2', 0)).toMatch(/positive/);
    expect(validateUpdate('L2', -2)).toMatch(/positive/);
    expect(validateUpdate('L2', NaN)).toMatch(/positive/);
    expect(validateUpdate('', 2)).toMatch(/required/);
    expect(validateUpdate('L2', 2.5)).toBeNull();
  });
});

describe('csv parsing', () => {
  it('parses the load-served curve point-for-point', () => {
    const csv = 'step,pct_served,kw_served\n1,0.00,0.000\n2,100.00,80.000\n';
    expect(parseLoadServedCsv(csv)).toEqual([
      { step: 1, pct: 0, kw: 0 },
      { step: 2, pct: 100, kw: 80 },
    ]);
  });

  it('rejects unknown headers', () => {
    expect(() => parseLoadServedCsv('a,b\n1,2\n')).toThrow(/header/);
  });

  it('parses the objective trace', () => {
    const csv =
      'iteration,sample_size,stall,objective,wall\n0,0,0,7304.000000,0.0000\n' +
      '1,2,1,7304.000000,0.2000\n';
    expect(parseObjectiveCsv(csv)).toEqual([
      { iteration: 0, objective: 7304 },
      { iteration: 1, objective: 7304 },
    ]);
  });
});
