// Promotion flow: the trend dashboard and candidate ranking feed the
// operator's choice; chain drafts are citation-checked live against the
// response text and survive reloads until submitted or discarded. Quota and
// budget errors from the server surface inline without losing drafts.

import { ApiError, ReviewApi } from '../api.js';
import { DraftStore } from '../drafts.js';
import { clear, el, errorPanel } from '../dom.js';
import { citationGrounded } from '../highlight.js';
import { waitForRun } from '../jobs.js';
import type { CandidateDoc, ChainDraft, TrendsDoc } from '../types.js';

export type ChainDrafts = Record<string, ChainDraft>;

export function draftsSubmittable(
  erring: string[],
  drafts: ChainDrafts,
  parts: Record<string, string>,
): boolean {
  return erring.every((cid) => {
    const draft = drafts[cid];
    return (
      !!draft &&
      draft.text.trim().length > 0 &&
      citationGrounded(draft.citation, parts)
    );
  });
}

function trendDashboard(trends: TrendsDoc): HTMLElement {
  const rows = Object.entries(trends.criteria).map(([cid, cell]) =>
    el(
      'tr',
      { 'data-criterion': cid },
      el('td', {}, cid),
      el('td', {}, String(cell.fp)),
      el('td', {}, String(cell.fn)),
      el('td', { class: `label-${cell.label}` }, cell.label),
    ),
  );
  return el(
    'table',
    { class: 'trends' },
    el(
      'thead',
      {},
      el('tr', {}, el('th', {}, 'criterion'), el('th', {}, 'fp'), el('th', {}, 'fn'), el('th', {}, 'trend')),
    ),
    el('tbody', {}, ...rows),
    el(
      'caption',
      {},
      `overall: ${trends.overall.label} (fp=${trends.overall.fp}, fn=${trends.overall.fn})`,
    ),
  );
}

export async function promotionView(
  container: HTMLElement,
  api: ReviewApi,
  drafts: DraftStore,
  runId: string,
): Promise<void> {
  clear(container);
  const [trends, candidates, run] = await Promise.all([
    api.getTrends(runId),
    api.getCandidates(runId),
    api.getRun(runId),
  ]);

  container.append(el('h2', {}, `Promotion for run ${runId}`), trendDashboard(trends));
  const messages = el('div', { class: 'messages' });
  const editor = el('div', { class: 'chain-editor' });
  container.append(messages, editor);

  if (candidates.candidates.length === 0) {
    container.append(el('p', {}, 'No candidates: every labeled instance scored correctly.'));
    return;
  }

  const list = el('ol', { class: 'candidates' });
  container.append(list, editor);

  const openEditor = async (candidate: CandidateDoc) => {
    clear(editor);
    clear(messages);
    const detail = await api.getResult(runId, candidate.response);
    const parts = detail.parts ?? {};
    const draftKey = `${runId}:${candidate.response}`;
    const saved = drafts.load<ChainDrafts>('promotion', draftKey) ?? {};

    editor.append(el('h3', {}, `Chains for ${candidate.response}`));
    for (const [label, text] of Object.entries(parts)) {
      editor.append(el('p', { class: 'part-text' }, `${label}: ${text}`));
    }

    const fields = new Map<string, { citation: HTMLInputElement; text: HTMLTextAreaElement; status: HTMLElement }>();
    const submit = el('button', { type: 'button', disabled: true }, 'Promote exemplar');

    const currentDrafts = (): ChainDrafts => {
      const out: ChainDrafts = {};
      for (const [cid, field] of fields) {
        out[cid] = { citation: field.citation.value, text: field.text.value };
      }
      return out;
    };

    const revalidate = () => {
      const draftsNow = currentDrafts();
      drafts.save('promotion', draftKey, draftsNow); // survive reloads
      for (const [cid, field] of fields) {
        const grounded = citationGrounded(draftsNow[cid].citation, parts);
        field.status.textContent = grounded
          ? 'citation found in response'
          : 'citation is not a verbatim substring of the response';
        field.status.className = grounded ? 'citation-ok' : 'citation-missing';
      }
      if (draftsSubmittable(candidate.erring, draftsNow, parts)) {
        submit.removeAttribute('disabled');
      } else {
        submit.setAttribute('disabled', '');
      }
    };

    for (const cid of candidate.erring) {
      const citation = el('input', {
        type: 'text',
        'aria-label': `citation for ${cid}`,
        value: saved[cid]?.citation ?? '',
      }) as HTMLInputElement;
      const text = el('textarea', {
        'aria-label': `chain for ${cid}`,
      }) as HTMLTextAreaElement;
      text.value = saved[cid]?.text ?? '';
      const status = el('span', { class: 'citation-missing' }, '');
      citation.addEventListener('input', revalidate);
      text.addEventListener('input', revalidate);
      fields.set(cid, { citation, text, status });
      editor.append(
        el(
          'fieldset',
          { 'data-criterion': cid },
          el('legend', {}, cid),
          el('label', {}, 'citation ', citation),
          status,
          el('label', {}, 'reasoning ', text),
        ),
      );
    }
    editor.append(submit);
    revalidate();

    submit.addEventListener('click', async () => {
      submit.setAttribute('disabled', '');
      try {
        const promoted = await api.promoteExemplar({
          run: runId,
          response: candidate.response,
          chains: currentDrafts(),
        });
        drafts.discard('promotion', draftKey);
        clear(messages);
        messages.append(
          el(
            'p',
            { class: 'promotion-done' },
            `promoted ${promoted.exemplar}; new config ${promoted.config.slice(0, 12)}`,
          ),
        );

        const rerun = el('button', { type: 'button' }, 'Start validation rerun');
        const jobStatus = el('span', { class: 'job-status', 'aria-live': 'polite' }, '');
        rerun.addEventListener('click', async () => {
          rerun.setAttribute('disabled', '');
          try {
            const { job } = await api.startRun({
              config: promoted.config,
              split: run.split,
              provider: run.provider,
              allow_unbalanced: true,
            });
            jobStatus.textContent = `job ${job}: queued`;
            await waitForRun(api, job, {
              onTick: (status) => {
                jobStatus.textContent = `job ${job}: ${status}`;
              },
            });
            jobStatus.textContent = `job ${job}: complete`;
          } catch (err) {
            jobStatus.textContent = err instanceof Error ? err.message : String(err);
          }
        });
        messages.append(rerun, jobStatus);
      } catch (err) {
        revalidate(); // drafts are intact; re-enable if still valid
        if (err instanceof ApiError) {
          clear(messages);
          messages.append(errorPanel(`${err.code}: ${err.message}`));
          return;
        }
        throw err;
      }
    });
  };

  candidates.candidates.forEach((candidate, index) => {
    const open = el(
      'button',
      { type: 'button', 'data-response': candidate.response },
      `${candidate.response} · score ${candidate.score} · erring ${candidate.erring.join(', ')}`,
    );
    open.addEventListener('click', () => void openEditor(candidate));
    list.append(el('li', { value: String(index + 1) }, open));
  });
}
