// Payload shapes returned by the review service. These mirror the on-disk
// record schemas; the UI never reshapes or recomputes them.

export interface RunManifest {
  run_id: string;
  config_hash: string;
  provider: string;
  assessment: string;
  split: string;
  split_ids: string[];
  started: number;
  finished: number | null;
  status: 'queued' | 'running' | 'complete' | 'failed';
  job?: { status: string; error?: ApiErrorBody };
}

export interface ResultLine {
  response_id: string;
  result: {
    scores: Record<string, number>;
    reasoning: Record<string, string>;
    reported_total: number;
    raw?: { finish_reason: string; attempts: number; latency_s: number };
  };
  human?: Record<string, number>;
  matches?: Record<string, boolean>;
  discrepancy?: { kind: 'under' | 'over'; magnitude: number };
  parts?: Record<string, string>;
  error?: { code: string; message: string };
}

export interface RunDetail extends RunManifest {
  results: ResultLine[];
  errors: { response_id: string; code: string; message: string }[];
}

export interface MetricsDoc {
  run: string;
  criteria: {
    criterion: string;
    qwk: number;
    accuracy: number;
    fp: number;
    fn: number;
    confusion: number[][];
  }[];
  avg_subscore_qwk: number;
  total_score_qwk: number;
  discrepancies: { under: number; over: number };
  labeled_pairs: number;
  excluded: number;
}

export interface TrendCell {
  fp: number;
  fn: number;
  label: 'overscoring' | 'underscoring' | 'balanced';
}

export interface TrendsDoc {
  run: string;
  threshold: number;
  criteria: Record<string, TrendCell>;
  overall: TrendCell;
}

export interface CandidateDoc {
  response: string;
  score: number;
  total_delta: number;
  trend_matches: number;
  struggling_hits: number;
  erring: string[];
}

export interface CandidatesDoc {
  run: string;
  weights: number[];
  candidates: CandidateDoc[];
}

export interface SessionRound {
  sample: string[];
  scores: Record<string, Record<string, Record<string, number>>>;
  kappa: number | null;
  qwk: number | null;
}

export interface SessionDoc {
  session_id: string;
  assessment: string;
  rubric: string;
  raters: string[];
  fraction: number;
  seed: number;
  status: 'open' | 'needs_resample' | 'consensus';
  rounds: SessionRound[];
  resolutions: {
    response: string;
    criterion: string;
    value: number;
    note: string | null;
    rater_values: Record<string, number>;
    sticking_point: string | null;
  }[];
  gate?: { kappa: number; consensus: boolean };
  sticking_point?: string;
}

export interface RubricDoc {
  id: string;
  title: string;
  scheme:
    | { kind: 'multi_label_binary'; criteria: { id: string; description: string }[] }
    | { kind: 'multi_class_ordinal'; min: number; max: number; levels: Record<string, string> };
  guidelines: string[];
}

export interface AssessmentDoc {
  id: string;
  question: string;
  background: string;
  gold_response: string;
  rubric: string;
}

export interface ChainDraft {
  citation: string;
  text: string;
}

export interface PromotionResult {
  exemplar: string;
  config: string;
  balance_violations: string[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: Record<string, unknown>;
}
