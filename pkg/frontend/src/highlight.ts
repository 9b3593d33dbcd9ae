// Evidence highlighting: exact substring match of cited text, nothing fuzzy.
// Reasoning chains quote student text in single quotes; a quoted span counts
// as a citation only if it occurs verbatim in the response text, which
// filters out apostrophe artifacts and rubric quotes.

export interface Span {
  start: number;
  end: number;
}

export interface Segment {
  text: string;
  cited: boolean;
}

const MAX_CITATION_LENGTH = 300;

export function extractCitations(reasoning: string, responseText: string): string[] {
  // Apostrophes double as quote marks ("the student's ... 'all is absorbed'"),
  // so naive pairing mis-parses. Consider the text between every pair of
  // apostrophes, keep only spans that occur verbatim in the response, then
  // drop fragments contained in a longer accepted span.
  const positions: number[] = [];
  for (let i = 0; i < reasoning.length; i += 1) {
    if (reasoning[i] === "'") positions.push(i);
  }
  const found: string[] = [];
  for (let a = 0; a < positions.length; a += 1) {
    for (let b = a + 1; b < positions.length; b += 1) {
      const candidate = reasoning.slice(positions[a] + 1, positions[b]);
      if (candidate.length > MAX_CITATION_LENGTH) break;
      if (candidate.trim().length < 2) continue;
      if (!responseText.includes(candidate)) continue;
      if (!found.includes(candidate)) found.push(candidate);
    }
  }
  return found.filter((c) => !found.some((d) => d !== c && d.includes(c)));
}

export function findSpans(text: string, citations: string[]): Span[] {
  const spans: Span[] = [];
  for (const citation of citations) {
    if (citation.length === 0) continue;
    let from = 0;
    while (true) {
      const at = text.indexOf(citation, from);
      if (at < 0) break;
      spans.push({ start: at, end: at + citation.length });
      from = at + 1;
    }
  }
  return mergeSpans(spans);
}

export function mergeSpans(spans: Span[]): Span[] {
  const sorted = [...spans].sort((a, b) => a.start - b.start || a.end - b.end);
  const merged: Span[] = [];
  for (const span of sorted) {
    const last = merged[merged.length - 1];
    if (last && span.start <= last.end) {
      last.end = Math.max(last.end, span.end);
    } else {
      merged.push({ ...span });
    }
  }
  return merged;
}

export function segment(text: string, spans: Span[]): Segment[] {
  const segments: Segment[] = [];
  let cursor = 0;
  for (const span of mergeSpans(spans)) {
    if (span.start > cursor) {
      segments.push({ text: text.slice(cursor, span.start), cited: false });
    }
    segments.push({ text: text.slice(span.start, span.end), cited: true });
    cursor = span.end;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), cited: false });
  }
  return segments;
}

// The submission-blocking check used by the chain editor: a draft citation
// must be a verbatim substring of some response part.
export function citationGrounded(
  citation: string,
  parts: Record<string, string>,
): boolean {
  if (citation.trim().length === 0) return false;
  return Object.values(parts).some((part) => part.includes(citation));
}
