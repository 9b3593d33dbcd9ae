// App shell: hash routing over the three screens plus run/session pickers,
// with j/k instance navigation and single-key screen switches.

import { ReviewApi } from './api.js';
import { defaultDraftStore } from './drafts.js';
import { clear, el, errorPanel } from './dom.js';
import { Keymap } from './keyboard.js';
import { AppState } from './state.js';
import { instanceReviewView } from './views/instanceReview.js';
import { irrAdjudicationView } from './views/irrAdjudication.js';
import { promotionView } from './views/promotion.js';

const api = new ReviewApi('');
const state = new AppState();
const drafts = defaultDraftStore();

function navigate(hash: string): void {
  window.location.hash = hash;
}

async function runsScreen(container: HTMLElement): Promise<void> {
  clear(container);
  const runs = await api.listRuns();
  const list = el('ul', { class: 'runs' });
  for (const run of runs) {
    const open = el(
      'button',
      { type: 'button' },
      `${run.run_id} · ${run.assessment}/${run.split} · ${run.status}`,
    );
    open.addEventListener('click', () => navigate(`#/runs/${run.run_id}`));
    list.append(el('li', {}, open));
  }
  container.append(el('h2', {}, 'Runs'), runs.length ? list : el('p', {}, 'No runs yet.'));
}

async function runScreen(container: HTMLElement, runId: string): Promise<void> {
  clear(container);
  const run = await api.getRun(runId);
  state.selectRun(runId, run.results.map((r) => r.response_id));
  const current = state.currentResult();
  if (current === null) {
    container.append(el('p', {}, `run ${runId} has no parsed results`));
    return;
  }
  navigate(`#/runs/${runId}/results/${current}`);
}

async function sessionsScreen(container: HTMLElement): Promise<void> {
  clear(container);
  const sessions = await api.listSessions();
  const list = el('ul', { class: 'sessions' });
  for (const session of sessions) {
    const open = el(
      'button',
      { type: 'button' },
      `${session.session_id} · ${session.assessment} · ${session.status}`,
    );
    open.addEventListener('click', () => navigate(`#/irr/${session.session_id}`));
    list.append(el('li', {}, open));
  }
  container.append(
    el('h2', {}, 'IRR sessions'),
    sessions.length ? list : el('p', {}, 'No sessions yet.'),
  );
}

async function route(): Promise<void> {
  const container = document.getElementById('screen');
  if (!container) return;
  const hash = window.location.hash || '#/runs';
  const parts = hash.replace(/^#\//, '').split('/');
  try {
    if (parts[0] === 'runs' && parts.length === 1) {
      await runsScreen(container);
    } else if (parts[0] === 'runs' && parts.length === 2) {
      await runScreen(container, parts[1]);
    } else if (parts[0] === 'runs' && parts[2] === 'results') {
      await instanceReviewView(container, api, parts[1], parts[3]);
    } else if (parts[0] === 'irr' && parts.length === 2) {
      await irrAdjudicationView(container, api, parts[1]);
    } else if (parts[0] === 'irr') {
      await sessionsScreen(container);
    } else if (parts[0] === 'promote' && parts.length === 2) {
      await promotionView(container, api, drafts, parts[1]);
    } else {
      await runsScreen(container);
    }
  } catch (err) {
    clear(container);
    container.append(
      errorPanel(err instanceof Error ? err.message : String(err), () => void route()),
    );
  }
}

function bindKeys(): void {
  const keymap = new Keymap()
    .bind('j', 'next instance', () => {
      const next = state.moveCursor(1);
      const { runId } = state.snapshot();
      if (runId && next) navigate(`#/runs/${runId}/results/${next}`);
    })
    .bind('k', 'previous instance', () => {
      const prev = state.moveCursor(-1);
      const { runId } = state.snapshot();
      if (runId && prev) navigate(`#/runs/${runId}/results/${prev}`);
    })
    .bind('r', 'runs', () => navigate('#/runs'))
    .bind('i', 'IRR sessions', () => navigate('#/irr'))
    .bind('p', 'promotion for current run', () => {
      const { runId } = state.snapshot();
      if (runId) navigate(`#/promote/${runId}`);
    });
  keymap.attach(window);
  const help = document.getElementById('keys');
  if (help) help.textContent = keymap.help().join('  ·  ');
}

export function start(): void {
  bindKeys();
  window.addEventListener('hashchange', () => void route());
  void route();
}

if (typeof document !== 'undefined' && document.getElementById('screen')) {
  start();
}
