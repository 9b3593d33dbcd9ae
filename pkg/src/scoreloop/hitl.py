"""Human-in-the-loop procedures.

Inter-rater-reliability sessions gate on unweighted kappa >= 0.70 over
pooled binary decisions (multi-label) or ordinal labels; disagreement
resolutions can promote to sticking points that spawn guidelines or
exemplars. Scoring trends label each criterion over/under/balanced from
false-positive and false-negative tallies, candidate ranking scores
misscored validation instances for promotion, and promotion itself is
transactional: one exemplar per loop iteration, checked against the token
budget before anything is written.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, MutableMapping, Sequence

from .corpus import (
    BalanceReport,
    CotChain,
    Exemplar,
    ExemplarStore,
    ResponseSet,
    StudentResponse,
    check_balance,
    round_half_up,
)
from .errors import (
    IncompleteScoring,
    InsufficientData,
    IterationQuotaExceeded,
    NoSuchDisagreement,
    NotValidationRun,
    ScoreloopError,
)
from .metrics import LabelSeries, cohen_kappa, quadratic_weighted_kappa
from .prompting import PromptConfig, assemble_prompt
from .rubric import (
    Assessment,
    MultiLabelBinary,
    ORDINAL_KEY,
    Rubric,
    ScoreVector,
    make_score_vector,
    max_score,
    total_score,
)
from .runner import RunRecord, ScoredResult

import random

KAPPA_GATE = 0.70

OVERSCORING = "overscoring"
UNDERSCORING = "underscoring"
BALANCED = "balanced"

STATUS_OPEN = "open"
STATUS_NEEDS_RESAMPLE = "needs_resample"
STATUS_CONSENSUS = "consensus"


# ---------------------------------------------------------------------------
# IRR sessions


@dataclass
class IrrRound:
    sample: tuple[str, ...]
    scores: dict[str, dict[str, ScoreVector]] = field(default_factory=dict)  # rater -> id -> sv
    kappa: float | None = None
    qwk: float | None = None  # diagnostic only; the gate uses unweighted kappa


@dataclass
class Resolution:
    response_id: str
    criterion: str
    value: int
    note: str | None
    rater_values: dict[str, int]
    sticking_point: str | None = None


@dataclass
class IrrSession:
    session_id: str
    assessment_id: str
    rubric_id: str
    raters: tuple[str, str]
    fraction: float
    seed: int
    rounds: list[IrrRound] = field(default_factory=list)
    resolutions: list[Resolution] = field(default_factory=list)
    status: str = STATUS_OPEN

    @property
    def current(self) -> IrrRound:
        return self.rounds[-1]

    def sampled_ids(self) -> tuple[str, ...]:
        seen: list[str] = []
        for rnd in self.rounds:
            for rid in rnd.sample:
                if rid not in seen:
                    seen.append(rid)
        return tuple(seen)

    def kappa_history(self) -> tuple[float, ...]:
        return tuple(r.kappa for r in self.rounds if r.kappa is not None)


def _draw_sample(ids: Sequence[str], n: int, seed: int) -> tuple[str, ...]:
    order = sorted(ids)
    random.Random(seed).shuffle(order)
    return tuple(order[:n])


def open_irr_session(
    responses: ResponseSet | Sequence[str],
    fraction: float = 0.2,
    seed: int = 0,
    raters: tuple[str, str] = ("rater_a", "rater_b"),
    session_id: str = "irr-1",
) -> IrrSession:
    """Seeded sample of round_half_up(fraction * N) response ids for two raters.

    The sampled ids are queued for withholding from any later test split;
    committing them happens when the session reaches consensus.
    """
    ids = responses.ids() if isinstance(responses, ResponseSet) else tuple(responses)
    if len(set(raters)) != 2:
        raise ScoreloopError("exactly two distinct raters are required")
    if not 0.0 <= fraction <= 1.0:
        raise InsufficientData(f"sample fraction {fraction} outside [0, 1]")
    n = round_half_up(fraction * len(ids))
    if n < 1:
        raise InsufficientData(
            f"fraction {fraction} of {len(ids)} responses samples nothing"
        )
    session = IrrSession(
        session_id=session_id,
        assessment_id=responses.assessment_id if isinstance(responses, ResponseSet) else "",
        rubric_id="",
        raters=tuple(raters),  # type: ignore[arg-type]
        fraction=fraction,
        seed=seed,
    )
    session.rounds.append(IrrRound(sample=_draw_sample(ids, n, seed)))
    return session


def record_scores(
    session: IrrSession,
    rater: str,
    scores: Mapping[str, ScoreVector],
) -> None:
    if rater not in session.raters:
        raise ScoreloopError(f"unknown rater {rater!r}", rater=rater)
    unknown = sorted(set(scores) - set(session.current.sample))
    if unknown:
        raise ScoreloopError(f"scores for unsampled ids: {unknown}")
    session.current.scores.setdefault(rater, {}).update(scores)


def _pooled_pairs(session: IrrSession, rubric: Rubric) -> list[tuple[int, int]]:
    a, b = session.raters
    rnd = session.current
    pairs: list[tuple[int, int]] = []
    for rid in rnd.sample:
        sv_a = rnd.scores[a][rid].as_mapping()
        sv_b = rnd.scores[b][rid].as_mapping()
        for cid in rubric.criterion_ids():
            pairs.append((sv_a[cid], sv_b[cid]))
    return pairs


def compute_session_kappa(session: IrrSession, rubric: Rubric) -> tuple[float, bool]:
    """Pooled unweighted kappa for the current round, and the gate decision.

    Multi-label sessions pool every (instance, criterion) binary decision
    into one contingency table. A QWK diagnostic is stored alongside but
    never gates.
    """
    rnd = session.current
    for rater in session.raters:
        scored = set(rnd.scores.get(rater, {}))
        missing = [rid for rid in rnd.sample if rid not in scored]
        if missing:
            raise IncompleteScoring(
                f"rater {rater!r} has not scored {len(missing)} sampled ids",
                rater=rater,
                missing=missing,
            )
    if rubric.is_ordinal:
        lo, hi = rubric.scheme.min, rubric.scheme.max  # type: ignore[union-attr]
        pairs = _pooled_pairs(session, rubric)
        series = LabelSeries(pairs=tuple(pairs), value_range=(lo, hi))
        kappa = cohen_kappa(series)
        qwk = quadratic_weighted_kappa(series)
    else:
        pairs = _pooled_pairs(session, rubric)
        series = LabelSeries(pairs=tuple(pairs), value_range=(0, 1))
        kappa = cohen_kappa(series)
        a, b = session.raters
        totals = [
            (
                total_score(rubric, rnd.scores[a][rid]),
                total_score(rubric, rnd.scores[b][rid]),
            )
            for rid in rnd.sample
        ]
        qwk = quadratic_weighted_kappa(
            LabelSeries(pairs=tuple(totals), value_range=(0, max_score(rubric)))
        )
    rnd.kappa = kappa
    rnd.qwk = qwk
    consensus = kappa >= KAPPA_GATE
    session.status = STATUS_CONSENSUS if consensus else STATUS_NEEDS_RESAMPLE
    return kappa, consensus


def per_criterion_kappa(session: IrrSession, rubric: Rubric) -> dict[str, float]:
    """Diagnostic unweighted kappa per criterion; the gate never uses this."""
    a, b = session.raters
    rnd = session.current
    out: dict[str, float] = {}
    for cid in rubric.criterion_ids():
        lo, hi = rubric.score_range(cid)
        pairs = tuple(
            (rnd.scores[a][rid].as_mapping()[cid], rnd.scores[b][rid].as_mapping()[cid])
            for rid in rnd.sample
            if rid in rnd.scores.get(a, {}) and rid in rnd.scores.get(b, {})
        )
        if pairs:
            out[cid] = cohen_kappa(LabelSeries(pairs=pairs, value_range=(lo, hi)))
    return out


def resample(session: IrrSession, ids: Sequence[str] | ResponseSet) -> IrrSession:
    """Open a fresh round with a new seeded sample after a failed gate."""
    if session.status != STATUS_NEEDS_RESAMPLE:
        raise ScoreloopError("only sessions below the gate are resampled")
    pool = ids.ids() if isinstance(ids, ResponseSet) else tuple(ids)
    n = round_half_up(session.fraction * len(pool))
    if n < 1:
        raise InsufficientData("resample would draw nothing")
    session.rounds.append(
        IrrRound(sample=_draw_sample(pool, n, session.seed + len(session.rounds)))
    )
    session.status = STATUS_OPEN
    return session


def disagreements(session: IrrSession, rubric: Rubric) -> list[tuple[str, str]]:
    a, b = session.raters
    rnd = session.current
    out: list[tuple[str, str]] = []
    resolved = {(r.response_id, r.criterion) for r in session.resolutions}
    for rid in rnd.sample:
        if rid not in rnd.scores.get(a, {}) or rid not in rnd.scores.get(b, {}):
            continue
        sv_a = rnd.scores[a][rid].as_mapping()
        sv_b = rnd.scores[b][rid].as_mapping()
        for cid in rubric.criterion_ids():
            if sv_a[cid] != sv_b[cid] and (rid, cid) not in resolved:
                out.append((rid, cid))
    return out


@dataclass
class StickingPoint:
    id: str
    description: str
    affected_criteria: tuple[str, ...]
    resolution: str
    spawned_guideline: str | None = None
    spawned_exemplar: str | None = None


def resolve_disagreement(
    session: IrrSession,
    rubric: Rubric,
    response_id: str,
    criterion: str,
    consensus_value: int,
    note: str | None = None,
    sticking_point_id: str | None = None,
) -> tuple[IrrSession, StickingPoint | None]:
    """Store a consensus label for one live disagreement.

    A note promotes the resolution to a sticking point, which the caller may
    then use to spawn a guideline or exemplar.
    """
    live = disagreements(session, rubric)
    if (response_id, criterion) not in live:
        raise NoSuchDisagreement(
            f"no live disagreement at ({response_id}, {criterion})",
            response=response_id,
            criterion=criterion,
        )
    a, b = session.raters
    rnd = session.current
    rater_values = {
        a: rnd.scores[a][response_id].as_mapping()[criterion],
        b: rnd.scores[b][response_id].as_mapping()[criterion],
    }
    point: StickingPoint | None = None
    if note:
        point = StickingPoint(
            id=sticking_point_id or f"{session.session_id}-{response_id}-{criterion}",
            description=note,
            affected_criteria=(criterion,),
            resolution=f"consensus {consensus_value} at ({response_id}, {criterion})",
        )
    session.resolutions.append(
        Resolution(
            response_id=response_id,
            criterion=criterion,
            value=consensus_value,
            note=note,
            rater_values=rater_values,
            sticking_point=point.id if point else None,
        )
    )
    return session, point


def consensus_labels(
    session: IrrSession, rubric: Rubric, response_id: str
) -> ScoreVector:
    """Final labels for one sampled response: rater agreement plus recorded
    resolutions. Fails while any coordinate is still disputed."""
    rnd = session.current
    if response_id not in rnd.sample:
        raise ScoreloopError(f"{response_id!r} is not in the current sample")
    a, b = session.raters
    sv_a = rnd.scores[a][response_id].as_mapping()
    sv_b = rnd.scores[b][response_id].as_mapping()
    resolved = {
        r.criterion: r.value
        for r in session.resolutions
        if r.response_id == response_id
    }
    values: dict[str, int] = {}
    for cid in rubric.criterion_ids():
        if sv_a[cid] == sv_b[cid]:
            values[cid] = sv_a[cid]
        elif cid in resolved:
            values[cid] = resolved[cid]
        else:
            raise IncompleteScoring(
                f"({response_id}, {cid}) is still disputed", criterion=cid
            )
    return make_score_vector(rubric, values)


def spawn_sticking_point_exemplar(
    point: StickingPoint,
    session: IrrSession,
    rubric: Rubric,
    response: StudentResponse,
    chains: Mapping[str, CotChain],
    store: ExemplarStore,
    exemplar_id: str | None = None,
) -> Exemplar:
    """Turn a resolved sticking point into a demonstrative exemplar.

    Labels come from the session consensus; chains must cover every
    criterion (the affected ones deserve hand-written text, the rest may
    reuse whole-response citations).
    """
    labels = consensus_labels(session, rubric, response.id)
    exemplar = Exemplar(
        id=exemplar_id or f"{rubric.id}-sp-{response.id}",
        kind="sticking_point",
        response=StudentResponse(
            id=response.id,
            assessment_id=response.assessment_id,
            parts=response.parts,
            human_scores=labels,
        ),
        labels=labels,
        cot=dict(chains),
    )
    store.add(exemplar)
    point.spawned_exemplar = exemplar.id
    return exemplar


def session_to_doc(session: IrrSession) -> dict[str, Any]:
    return {
        "session_id": session.session_id,
        "assessment": session.assessment_id,
        "rubric": session.rubric_id,
        "raters": list(session.raters),
        "fraction": session.fraction,
        "seed": session.seed,
        "status": session.status,
        "rounds": [
            {
                "sample": list(r.sample),
                "scores": {
                    rater: {rid: sv.as_mapping() for rid, sv in scored.items()}
                    for rater, scored in r.scores.items()
                },
                "kappa": r.kappa,
                "qwk": r.qwk,
            }
            for r in session.rounds
        ],
        "resolutions": [
            {
                "response": r.response_id,
                "criterion": r.criterion,
                "value": r.value,
                "note": r.note,
                "rater_values": r.rater_values,
                "sticking_point": r.sticking_point,
            }
            for r in session.resolutions
        ],
    }


def session_from_doc(doc: dict[str, Any], rubric: Rubric) -> IrrSession:
    session = IrrSession(
        session_id=str(doc["session_id"]),
        assessment_id=str(doc.get("assessment") or ""),
        rubric_id=str(doc.get("rubric") or ""),
        raters=tuple(doc["raters"]),  # type: ignore[arg-type]
        fraction=float(doc["fraction"]),
        seed=int(doc["seed"]),
        status=str(doc["status"]),
    )
    for rdoc in doc.get("rounds") or ():
        rnd = IrrRound(sample=tuple(rdoc["sample"]))
        for rater, scored in (rdoc.get("scores") or {}).items():
            rnd.scores[rater] = {
                rid: make_score_vector(rubric, values) for rid, values in scored.items()
            }
        rnd.kappa = rdoc.get("kappa")
        rnd.qwk = rdoc.get("qwk")
        session.rounds.append(rnd)
    for xdoc in doc.get("resolutions") or ():
        session.resolutions.append(
            Resolution(
                response_id=str(xdoc["response"]),
                criterion=str(xdoc["criterion"]),
                value=int(xdoc["value"]),
                note=xdoc.get("note"),
                rater_values={k: int(v) for k, v in xdoc["rater_values"].items()},
                sticking_point=xdoc.get("sticking_point"),
            )
        )
    return session


# ---------------------------------------------------------------------------
# scoring trends


@dataclass(frozen=True)
class TrendCell:
    fp: int
    fn: int
    label: str


@dataclass(frozen=True)
class TrendReport:
    run_id: str
    per_criterion: dict[str, TrendCell]
    overall: TrendCell
    threshold: float

    def to_doc(self) -> dict[str, Any]:
        return {
            "run": self.run_id,
            "threshold": self.threshold,
            "criteria": {
                cid: {"fp": c.fp, "fn": c.fn, "label": c.label}
                for cid, c in self.per_criterion.items()
            },
            "overall": {
                "fp": self.overall.fp,
                "fn": self.overall.fn,
                "label": self.overall.label,
            },
        }


def trend_label(fp: int, fn: int, threshold: float) -> str:
    if fp > 0 and fp >= threshold * fn:
        return OVERSCORING
    if fn > 0 and fn >= threshold * fp:
        return UNDERSCORING
    return BALANCED


def _error_directions(res: ScoredResult, rubric: Rubric) -> dict[str, str]:
    """Erring criteria of one labeled result, mapped to their direction."""
    assert res.human is not None
    human = res.human.as_mapping()
    out: dict[str, str] = {}
    for cid in rubric.criterion_ids():
        predicted = res.llm.scores[cid]
        if predicted > human[cid]:
            out[cid] = OVERSCORING
        elif predicted < human[cid]:
            out[cid] = UNDERSCORING
    return out


def detect_trends(run: RunRecord, rubric: Rubric, threshold: float = 2.0) -> TrendReport:
    """Per-criterion and overall FP/FN tallies with trend labels.

    A criterion is overscoring when FP >= threshold * FN with FP > 0, the
    symmetric rule marks underscoring, and everything else (including
    zero-error criteria) is balanced. The default 2.0 treats a 2:1 skew as
    a reportable trend.
    """
    if threshold < 1.0:
        raise ScoreloopError("trend threshold below 1 would let both labels fire")
    fp: dict[str, int] = {cid: 0 for cid in rubric.criterion_ids()}
    fn: dict[str, int] = {cid: 0 for cid in rubric.criterion_ids()}
    for res in run.results:
        if res.human is None:
            continue
        for cid, direction in _error_directions(res, rubric).items():
            if direction == OVERSCORING:
                fp[cid] += 1
            else:
                fn[cid] += 1
    per = {
        cid: TrendCell(fp=fp[cid], fn=fn[cid], label=trend_label(fp[cid], fn[cid], threshold))
        for cid in rubric.criterion_ids()
    }
    total_fp = sum(fp.values())
    total_fn = sum(fn.values())
    overall = TrendCell(
        fp=total_fp, fn=total_fn, label=trend_label(total_fp, total_fn, threshold)
    )
    return TrendReport(
        run_id=run.run_id, per_criterion=per, overall=overall, threshold=threshold
    )


# ---------------------------------------------------------------------------
# candidate ranking


@dataclass(frozen=True)
class Candidate:
    response_id: str
    score: float
    total_delta: int
    trend_match_count: int
    struggling_criterion_hits: int
    erring_criteria: tuple[str, ...]

    def to_doc(self) -> dict[str, Any]:
        return {
            "response": self.response_id,
            "score": self.score,
            "total_delta": self.total_delta,
            "trend_matches": self.trend_match_count,
            "struggling_hits": self.struggling_criterion_hits,
            "erring": list(self.erring_criteria),
        }


@dataclass(frozen=True)
class CandidateRanking:
    run_id: str
    candidates: tuple[Candidate, ...]
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def ids(self) -> tuple[str, ...]:
        return tuple(c.response_id for c in self.candidates)

    def to_doc(self) -> dict[str, Any]:
        return {
            "run": self.run_id,
            "weights": list(self.weights),
            "candidates": [c.to_doc() for c in self.candidates],
        }


def rank_candidates(
    run: RunRecord,
    rubric: Rubric,
    trend: TrendReport | None = None,
    alpha: float = 1.0,
    beta: float = 1.0,
    gamma: float = 1.0,
) -> CandidateRanking:
    """Rank misscored instances by promotion value.

    score = alpha * |human total - stated LLM total|
          + beta  * (erring criteria whose direction matches the overall trend)
          + gamma * (erring criteria whose own trend label is not balanced)

    Correct instances are excluded; ties order by response id.
    """
    if run.split_name != "validation":
        warnings.warn(
            f"run {run.run_id!r} is on split {run.split_name!r}, not validation",
            NotValidationRun,
        )
    if trend is None:
        trend = detect_trends(run, rubric)
    candidates: list[Candidate] = []
    for res in run.results:
        if res.human is None:
            continue
        directions = _error_directions(res, rubric)
        if not directions:
            continue
        delta = abs(total_score(rubric, res.human) - res.llm.reported_total)
        matches = sum(
            1 for d in directions.values()
            if trend.overall.label != BALANCED and d == trend.overall.label
        )
        struggling = sum(
            1
            for cid in directions
            if trend.per_criterion[cid].label != BALANCED
        )
        candidates.append(
            Candidate(
                response_id=res.response_id,
                score=alpha * delta + beta * matches + gamma * struggling,
                total_delta=delta,
                trend_match_count=matches,
                struggling_criterion_hits=struggling,
                erring_criteria=tuple(sorted(directions)),
            )
        )
    candidates.sort(key=lambda c: (-c.score, c.response_id))
    return CandidateRanking(
        run_id=run.run_id, candidates=tuple(candidates), weights=(alpha, beta, gamma)
    )


# ---------------------------------------------------------------------------
# exemplar promotion


@dataclass(frozen=True)
class Promotion:
    exemplar: Exemplar
    config: PromptConfig
    balance: BalanceReport


def promote_exemplar(
    run: RunRecord,
    response: StudentResponse,
    chains: Mapping[str, CotChain],
    rubric: Rubric,
    assessment: Assessment,
    config: PromptConfig,
    store: ExemplarStore,
    promotions: MutableMapping[str, str],
    linked: Mapping[str, tuple[Assessment, Rubric]] | None = None,
    exemplar_id: str | None = None,
) -> Promotion:
    """Promote one misscored instance into the prompt as an exemplar.

    Exactly one promotion is allowed per run (the single-instance rule).
    Chains must cover every criterion the model misscored, each citing the
    response verbatim; remaining criteria are filled with whole-response
    citations so the exemplar satisfies full chain coverage. The new config
    must re-assemble within the token budget or nothing is written.
    """
    if run.run_id in promotions:
        raise IterationQuotaExceeded(
            f"run {run.run_id!r} already promoted exemplar {promotions[run.run_id]!r}",
            run=run.run_id,
        )
    ranking = rank_candidates(run, rubric)
    if response.id not in ranking.ids():
        raise ScoreloopError(
            f"response {response.id!r} is not a ranked candidate of run {run.run_id!r}",
            response=response.id,
        )
    result = run.result_for(response.id)
    assert result is not None and result.human is not None
    misscored = sorted(_error_directions(result, rubric))
    missing = [cid for cid in misscored if cid not in chains]
    if missing:
        raise ScoreloopError(
            f"chains must cover every misscored criterion; missing {missing}",
            missing=missing,
        )
    if response.human_scores is None:
        raise ScoreloopError(f"response {response.id!r} has no human labels")

    full_chains: dict[str, CotChain] = dict(chains)
    human = response.human_scores.as_mapping()
    fallback_citation = next(iter(response.parts.values()))
    clause_by_id = {cid: cid for cid in rubric.criterion_ids()}
    if isinstance(rubric.scheme, MultiLabelBinary):
        clause_by_id = {c.id: c.description for c in rubric.scheme.criteria}
    for cid in rubric.criterion_ids():
        if cid not in full_chains:
            full_chains[cid] = CotChain(
                citation=fallback_citation,
                text=config.cot_template.format(
                    citation=fallback_citation,
                    clause=clause_by_id[cid],
                    score=human[cid],
                ),
            )

    ex_id = exemplar_id or f"{assessment.id}-al-{response.id}"
    exemplar = Exemplar(
        id=ex_id,
        kind="active_learning",
        response=response,
        labels=response.human_scores,
        cot=full_chains,
    )

    new_config = replace(
        config,
        exemplar_ids=(*config.exemplar_ids, ex_id),
        guidelines=tuple(rubric.guidelines),
    )
    exemplar_map = {eid: store.get(eid) for eid in config.exemplar_ids}
    exemplar_map[ex_id] = exemplar
    balance = check_balance(exemplar_map.values(), rubric)
    # budget check happens before any write; on overshoot the store and
    # config history are untouched
    assemble_prompt(
        new_config,
        assessment=assessment,
        rubric=rubric,
        exemplars=exemplar_map,
        linked=linked,
        allow_unbalanced=True,
    )

    store.add(exemplar)
    promotions[run.run_id] = ex_id
    return Promotion(exemplar=exemplar, config=new_config, balance=balance)
