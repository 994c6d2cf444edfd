/** Pure render helpers: state in, HTML strings out (kept DOM-free so they
 * are trivially testable). */

import type { Incumbent, TimelineRow } from './api.js';
import type { ChartPoint, ConsoleState, TracePoint } from './model.js';

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

/** Crew / Route table straight from the incumbent payload. */
export function renderRouteTable(incumbent: Incumbent): string {
  const rows = Object.keys(incumbent.routes)
    .sort()
    .map((crew) => {
      const route = incumbent.routes[crew].join(' → ');
      return `<tr><td>${esc(crew)}</td><td>${esc(route)}</td></tr>`;
    })
    .join('');
  return (
    '<table class="routes"><thead><tr><th>Crew</th><th>Route</th></tr></thead>' +
    `<tbody>${rows}</tbody></table>`
  );
}

/** One Gantt bar per crew leg, in arrival order. */
export function renderGantt(incumbent: Incumbent): string {
  const bars = Object.keys(incumbent.itineraries)
    .sort()
    .map((crew) => {
      const legs = incumbent.itineraries[crew]
        .map(
          (leg) =>
            `<span class="leg" style="--at:${leg.arrival_step}">` +
            `${esc(leg.node)}@${leg.arrival_step}</span>`,
        )
        .join('');
      return `<div class="gantt-row"><b>${esc(crew)}</b>${legs}</div>`;
    })
    .join('');
  return `<div class="gantt">${bars}</div>`;
}

/** Load-served curve as sparkline points; one point per CSV row. */
export function renderLoadChart(points: ChartPoint[]): string {
  const marks = points
    .map((p) => `<i data-step="${p.step}" data-pct="${p.pct}" style="--v:${p.pct}"></i>`)
    .join('');
  return `<div class="chart load-served">${marks}</div>`;
}

export function renderObjectiveTrace(points: TracePoint[]): string {
  const marks = points
    .map((p) => `<i data-iter="${p.iteration}" data-obj="${p.objective}"></i>`)
    .join('');
  return `<div class="chart objective">${marks}</div>`;
}

export function renderTimeline(rows: TimelineRow[]): string {
  const body = rows
    .map(
      (r) =>
        `<tr><td>${r.step}</td><td>${esc(r.repaired.join(' '))}</td>` +
        `<td>${esc(r.opened.join(' '))}</td><td>${esc(r.closed.join(' '))}</td>` +
        `<td>${r.pct_served.toFixed(2)}%</td></tr>`,
    )
    .join('');
  return (
    '<table class="timeline"><thead><tr><th>Step</th><th>Repaired</th>' +
    '<th>Opened</th><th>Closed</th><th>Served</th></tr></thead>' +
    `<tbody>${body}</tbody></table>`
  );
}

export function renderHeader(state: ConsoleState): string {
  const phase = state.status ? state.status.phase : 'connecting';
  // never display an objective other than the service's incumbent objective
  const obj =
    state.incumbent !== null ? state.incumbent.objective.toFixed(2) : '—';
  const stale = state.stale ? ' <span class="stale">STALE</span>' : '';
  const banner = state.banner ? `<div class="banner">${esc(state.banner)}</div>` : '';
  return `${banner}<header>phase: ${esc(phase)} · objective: ${obj}${stale}</header>`;
}
