/** Browser entry: wires the console to the DOM of index.html. */

import { ServiceClient } from './api.js';
import { Console } from './console.js';
import { parseLoadServedCsv, parseObjectiveCsv } from './model.js';
import {
  renderGantt,
  renderHeader,
  renderLoadChart,
  renderObjectiveTrace,
  renderRouteTable,
  renderTimeline,
} from './views.js';

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const base = params.get('api') ?? 'http://127.0.0.1:8000';
  const runId = params.get('run') ?? 'run-1';
  const client = new ServiceClient(base);
  const console_ = new Console(client, runId);

  console_.start((state) => {
    byId('header').innerHTML = renderHeader(state);
    if (state.incumbent) {
      byId('routes').innerHTML = renderRouteTable(state.incumbent);
      byId('gantt').innerHTML = renderGantt(state.incumbent);
    }
    if (state.timeline) {
      byId('timeline').innerHTML = renderTimeline(state.timeline.rows);
    }
    if (state.metrics) {
      byId('load-chart').innerHTML = renderLoadChart(
        parseLoadServedCsv(state.metrics.load_served_csv),
      );
      byId('trace-chart').innerHTML = renderObjectiveTrace(
        parseObjectiveCsv(state.metrics.objective_csv),
      );
    }
  });

  const form = byId('update-form') as HTMLFormElement;
  form.addEventListener('submit', async (ev) => {
    ev.preventDefault();
    const line = (byId('update-line') as HTMLInputElement).value;
    const hours = Number((byId('update-hours') as HTMLInputElement).value);
    byId('update-result').textContent = await console_.submitUpdate(line, hours);
  });
}

if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', boot);
}
