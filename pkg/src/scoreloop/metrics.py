"""Agreement and error metrics.

Cohen's kappa and its quadratic-weighted variant over paired integer
labels, plus per-criterion false-positive/false-negative reports and the
aggregate run metrics (mean subscore QWK and total-score QWK).

Conventions that matter downstream:

* chance agreement uses each rater's own marginals (Cohen, not Scott);
* quadratic weights are w[i][j] = (i - j)^2 / (K - 1)^2 over K levels;
* degenerate chance agreement (p_e = 1, or zero expected weighted
  disagreement) returns 1.0 on perfect agreement and 0.0 otherwise, so
  constant-column series from echo-mock runs report 1.0 rather than NaN;
* the total-score series always spans [0, max_score] so weights stay
  stable across runs even when extremes are unobserved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

from .errors import EmptySeries, NoLabeledPairs, SingleLevelRange
from .rubric import MultiLabelBinary, Rubric, max_score, total_score

if TYPE_CHECKING:
    from .runner import RunRecord


@dataclass(frozen=True)
class LabelSeries:
    """Ordered (human, predicted) integer pairs over a fixed value range."""

    pairs: tuple[tuple[int, int], ...]
    value_range: tuple[int, int]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise EmptySeries("label series has no pairs")
        lo, hi = self.value_range
        for h, p in self.pairs:
            if not (lo <= h <= hi and lo <= p <= hi):
                raise EmptySeries(
                    f"pair ({h}, {p}) outside value range [{lo}, {hi}]"
                )


def _confusion(series: LabelSeries) -> np.ndarray:
    lo, hi = series.value_range
    k = hi - lo + 1
    obs = np.zeros((k, k), dtype=np.float64)
    for h, p in series.pairs:
        obs[h - lo, p - lo] += 1.0
    return obs


def cohen_kappa(series: LabelSeries) -> float:
    """Unweighted kappa: (p_o - p_e) / (1 - p_e)."""
    obs = _confusion(series)
    n = obs.sum()
    p_o = np.trace(obs) / n
    row = obs.sum(axis=1) / n
    col = obs.sum(axis=0) / n
    p_e = float(row @ col)
    if p_e >= 1.0:
        return 1.0 if p_o >= 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def quadratic_weighted_kappa(series: LabelSeries) -> float:
    """1 - (sum w*O) / (sum w*E) with quadratic weights.

    E is the outer product of the two marginals scaled to N. Collapses to
    :func:`cohen_kappa` when the range spans exactly two levels.
    """
    lo, hi = series.value_range
    k = hi - lo + 1
    if k < 2:
        raise SingleLevelRange(f"value range [{lo}, {hi}] spans fewer than 2 levels")
    obs = _confusion(series)
    n = obs.sum()
    idx = np.arange(k, dtype=np.float64)
    weights = (idx[:, None] - idx[None, :]) ** 2 / (k - 1) ** 2
    expected = np.outer(obs.sum(axis=1), obs.sum(axis=0)) / n
    num = float((weights * obs).sum())
    den = float((weights * expected).sum())
    if den == 0.0:
        return 1.0 if num == 0.0 else 0.0
    return float(1.0 - num / den)


@dataclass(frozen=True)
class CriterionReport:
    criterion_id: str
    qwk: float
    accuracy: float
    fp_count: int
    fn_count: int
    confusion: tuple[tuple[int, ...], ...]  # rows human, cols predicted

    def to_doc(self) -> dict[str, Any]:
        return {
            "criterion": self.criterion_id,
            "qwk": self.qwk,
            "accuracy": self.accuracy,
            "fp": self.fp_count,
            "fn": self.fn_count,
            "confusion": [list(r) for r in self.confusion],
        }


@dataclass(frozen=True)
class RunMetrics:
    run_id: str
    per_criterion: tuple[CriterionReport, ...]
    avg_subscore_qwk: float
    total_score_qwk: float
    under_count: int
    over_count: int
    labeled_pairs: int
    excluded: int  # parse failures: no prediction, never counted as zero

    def to_doc(self) -> dict[str, Any]:
        return {
            "run": self.run_id,
            "criteria": [r.to_doc() for r in self.per_criterion],
            "avg_subscore_qwk": self.avg_subscore_qwk,
            "total_score_qwk": self.total_score_qwk,
            "discrepancies": {"under": self.under_count, "over": self.over_count},
            "labeled_pairs": self.labeled_pairs,
            "excluded": self.excluded,
        }


def criterion_report(
    criterion_id: str, pairs: Sequence[tuple[int, int]], value_range: tuple[int, int]
) -> CriterionReport:
    series = LabelSeries(pairs=tuple(pairs), value_range=value_range)
    obs = _confusion(series)
    fp = sum(1 for h, p in pairs if p > h)
    fn = sum(1 for h, p in pairs if p < h)
    correct = len(pairs) - fp - fn
    return CriterionReport(
        criterion_id=criterion_id,
        qwk=quadratic_weighted_kappa(series),
        accuracy=correct / len(pairs),
        fp_count=fp,
        fn_count=fn,
        confusion=tuple(tuple(int(x) for x in row) for row in obs),
    )


def run_metrics(run: "RunRecord", rubric: Rubric) -> RunMetrics:
    """Aggregate metrics for one complete labeled run.

    Per-criterion QWK is computed over binary series (multi-label) or the one
    ordinal series; total-score QWK compares the model's own reported total
    against the sum of human subscores. Results with parse failures carry no
    prediction and are excluded pairwise (counted in ``excluded``).
    """
    labeled = [r for r in run.results if r.human is not None]
    if not labeled:
        raise NoLabeledPairs(f"run {run.run_id!r} has no labeled, parsed results")
    excluded = len(run.error_log)

    reports: list[CriterionReport] = []
    lo_hi_total = (0, max_score(rubric))
    if isinstance(rubric.scheme, MultiLabelBinary):
        for crit in rubric.scheme.criteria:
            pairs = [
                (res.human.values[crit.id], res.llm.scores[crit.id])
                for res in labeled
            ]
            reports.append(criterion_report(crit.id, pairs, (0, 1)))
    else:
        pairs = [(res.human.values, res.llm.scores["score"]) for res in labeled]
        reports.append(
            criterion_report("score", pairs, (rubric.scheme.min, rubric.scheme.max))
        )

    lo_t, hi_t = lo_hi_total
    total_pairs = [
        (
            total_score(rubric, res.human),
            min(max(res.llm.reported_total, lo_t), hi_t),
        )
        for res in labeled
    ]
    total_qwk = quadratic_weighted_kappa(
        LabelSeries(pairs=tuple(total_pairs), value_range=lo_hi_total)
    )

    under = sum(1 for r in labeled if r.discrepancy and r.discrepancy.kind == "under")
    over = sum(1 for r in labeled if r.discrepancy and r.discrepancy.kind == "over")

    return RunMetrics(
        run_id=run.run_id,
        per_criterion=tuple(reports),
        avg_subscore_qwk=float(np.mean([r.qwk for r in reports])),
        total_score_qwk=total_qwk,
        under_count=under,
        over_count=over,
        labeled_pairs=len(labeled),
        excluded=excluded,
    )


def format_metrics_table(metrics: RunMetrics) -> str:
    """Human-readable table: one row per criterion plus the total score."""
    lines = [f"run: {metrics.run_id}"]
    header = f"{'criterion':<12}{'qwk':>8}{'acc':>8}{'fp':>5}{'fn':>5}"
    lines.append(header)
    lines.append("-" * len(header))
    for rep in metrics.per_criterion:
        lines.append(
            f"{rep.criterion_id:<12}{rep.qwk:>8.3f}{rep.accuracy:>8.3f}"
            f"{rep.fp_count:>5}{rep.fn_count:>5}"
        )
    lines.append(f"{'Total Score':<12}{metrics.total_score_qwk:>8.3f}")
    lines.append(
        f"avg subscore qwk: {metrics.avg_subscore_qwk:.3f}  "
        f"under: {metrics.under_count}  over: {metrics.over_count}  "
        f"excluded: {metrics.excluded}"
    )
    return "\n".join(lines)
