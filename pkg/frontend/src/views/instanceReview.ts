// Instance review: the response with cited evidence highlighted, the
// model's per-criterion reasoning, human labels, match flags, and the
// total-score discrepancy badge. Every number shown here was fetched.

import { ApiError, ReviewApi } from '../api.js';
import { clear, el, errorPanel } from '../dom.js';
import { extractCitations, findSpans, segment } from '../highlight.js';
import type { ResultLine } from '../types.js';

export function discrepancyBadge(result: ResultLine): string | null {
  if (!result.discrepancy) return null;
  const sign = result.discrepancy.kind === 'under' ? '-' : '+';
  return `total ${sign}${result.discrepancy.magnitude}`;
}

function renderPart(
  label: string,
  text: string,
  citations: string[],
): HTMLElement {
  const paragraph = el('p', { class: 'part-text' });
  for (const piece of segment(text, findSpans(text, citations))) {
    paragraph.append(
      piece.cited
        ? el('mark', { class: 'cited' }, piece.text)
        : document.createTextNode(piece.text),
    );
  }
  return el('section', { class: 'part' }, el('h3', {}, label), paragraph);
}

export function renderResult(result: ResultLine): HTMLElement {
  const parts = result.parts ?? {};
  const joined = Object.values(parts).join('\n');
  const allCitations = Object.values(result.result.reasoning).flatMap((reasoning) =>
    extractCitations(reasoning, joined),
  );

  const root = el('div', { class: 'instance-review' });
  const heading = el('h2', {}, `Response ${result.response_id}`);
  const badge = discrepancyBadge(result);
  if (badge) {
    heading.append(' ', el('span', { class: 'badge discrepancy' }, badge));
  }
  root.append(heading);

  for (const [label, text] of Object.entries(parts)) {
    root.append(
      renderPart(label, text, allCitations.filter((c) => text.includes(c))),
    );
  }

  const table = el(
    'table',
    { class: 'criteria' },
    el(
      'thead',
      {},
      el(
        'tr',
        {},
        el('th', {}, 'criterion'),
        el('th', {}, 'model'),
        el('th', {}, 'human'),
        el('th', {}, 'match'),
        el('th', {}, 'reasoning'),
      ),
    ),
  );
  const body = el('tbody');
  for (const [cid, score] of Object.entries(result.result.scores)) {
    const human = result.human?.[cid];
    const match = result.matches?.[cid];
    body.append(
      el(
        'tr',
        { 'data-criterion': cid },
        el('td', {}, cid),
        el('td', {}, String(score)),
        el('td', { class: human === undefined ? 'unlabeled' : '' },
          human === undefined ? 'unlabeled' : String(human)),
        el('td', {}, match === undefined ? 'unlabeled' : match ? '✓' : '✗'),
        el('td', { class: 'reasoning' }, result.result.reasoning[cid]),
      ),
    );
  }
  table.append(body);
  root.append(table);
  root.append(
    el('p', { class: 'totals' }, `stated total: ${result.result.reported_total}`),
  );
  return root;
}

export async function instanceReviewView(
  container: HTMLElement,
  api: ReviewApi,
  runId: string,
  responseId: string,
): Promise<void> {
  clear(container);
  let result: ResultLine;
  try {
    result = await api.getResult(runId, responseId);
  } catch (err) {
    if (err instanceof ApiError) {
      container.append(errorPanel(`${err.code}: ${err.message}`));
      return;
    }
    throw err;
  }
  if (result.error) {
    container.append(
      errorPanel(`no parsed result: ${result.error.code}: ${result.error.message}`),
    );
    return;
  }
  container.append(renderResult(result));
}
