"""Acceptance gate: one test per criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one pass/fail line
per criterion (the conftest hook prints them).
"""

import dataclasses
import hashlib
import json
import random
import time
from pathlib import Path

import pytest

from scoreloop.corpus import CotChain, SplitSpec, round_half_up, split_dataset
from scoreloop.errors import IterationQuotaExceeded, TokenBudgetExceeded
from scoreloop.gateway import EchoLabelsProvider, FaultyProvider, ScriptedProvider
from scoreloop.hitl import (
    KAPPA_GATE,
    STATUS_CONSENSUS,
    compute_session_kappa,
    detect_trends,
    open_irr_session,
    record_scores,
)
from scoreloop.metrics import LabelSeries, cohen_kappa, quadratic_weighted_kappa, run_metrics
from scoreloop.prompting import CANONICAL_ORDER
from scoreloop.rubric import make_score_vector
from scoreloop.runner import execute_run

from oracle_kappa import brute_force_cohen, brute_force_qwk
from test_metrics import random_series

GOLDENS = Path(__file__).parent / "goldens"


def echo_provider(ws, assessment_id):
    rs = ws.responses(assessment_id)
    return EchoLabelsProvider(ws.rubric_for(assessment_id), {r.id: r for r in rs.responses})


# ---------------------------------------------------------------------------
# 1. metric oracle equivalence


def test_metric_oracle_equivalence():
    started = time.monotonic()

    # hand-derived cases pass exactly
    pairs = [(0, 0)] * 45 + [(0, 1)] * 5 + [(1, 0)] * 5 + [(1, 1)] * 45
    series = LabelSeries(pairs=tuple(pairs), value_range=(0, 1))
    assert cohen_kappa(series) == pytest.approx(0.8, abs=1e-15)
    antipodal = LabelSeries(pairs=((0, 4), (4, 0)), value_range=(0, 4))
    assert quadratic_weighted_kappa(antipodal) == pytest.approx(-1.0, abs=1e-15)

    rng = random.Random(193)
    for _ in range(1000):
        series = random_series(rng, max_k=5, max_n=12)
        lo, hi = series.value_range
        pairs = list(series.pairs)
        assert abs(cohen_kappa(series) - brute_force_cohen(pairs, lo, hi)) <= 1e-12
        assert abs(
            quadratic_weighted_kappa(series) - brute_force_qwk(pairs, lo, hi)
        ) <= 1e-12

    assert time.monotonic() - started < 5.0


# ---------------------------------------------------------------------------
# 2. split fidelity


def test_split_fidelity():
    started = time.monotonic()

    for n, expected in ((158, (126, 32)), (166, (133, 33)), (161, (129, 32))):
        ids = [f"s{i:03d}" for i in range(n)]
        train, test = split_dataset(ids, SplitSpec(test_fraction=0.2, seed=11))
        assert (len(train), len(test)) == expected

    rng = random.Random(877)
    for _ in range(500):
        n = rng.randint(2, 120)
        ids = [f"s{i:03d}" for i in range(n)]
        withheld = frozenset(rng.sample(ids, rng.randint(0, n)))
        fraction = rng.uniform(0.05, 0.95)
        spec = SplitSpec(test_fraction=fraction, seed=rng.randint(0, 10**6),
                         withheld_from_test=withheld)
        train, test = split_dataset(ids, spec)
        assert sorted(train + test) == sorted(ids)          # partition
        assert not (set(train) & set(test))
        assert not (withheld & set(test))                    # leakage rule
        assert len(test) == min(round_half_up(fraction * n), n - len(withheld))

    assert time.monotonic() - started < 5.0


# ---------------------------------------------------------------------------
# 3. end-to-end oracle closure


def test_e2e_oracle_closure(workspace):
    started = time.monotonic()
    for aid in ("rules", "debugging", "engineering"):
        workspace.make_split(aid, test_fraction=0.2, seed=3)
        record = workspace.execute(
            workspace.latest_config(aid), "test", echo_provider(workspace, aid),
            run_id=f"closure-{aid}",
        )
        assert record.status == "complete" and not record.error_log
        metrics = run_metrics(record, workspace.rubric_for(aid))
        for report in metrics.per_criterion:
            assert report.qwk == 1.0, f"{aid}/{report.criterion_id}"
            assert report.fp_count == 0 and report.fn_count == 0
        assert metrics.total_score_qwk == 1.0
        assert metrics.avg_subscore_qwk == 1.0
        assert metrics.under_count == 0 and metrics.over_count == 0
    assert time.monotonic() - started < 10.0


# ---------------------------------------------------------------------------
# 4. discrepancy detection


def test_discrepancy_detection(workspace):
    ws = workspace
    rubric = ws.rubric("rules")
    responses = ws.responses("rules").responses[:32]
    assert len(responses) == 32

    rng = random.Random(51)
    under_ids = set(rng.sample([r.id for r in responses], 7))
    script = {}
    for resp in responses:
        labels = resp.human_scores.as_mapping()
        subtotal = sum(labels.values())
        reported = subtotal - 1 if resp.id in under_ids else subtotal
        script[resp.id] = json.dumps(
            {
                "criteria": [
                    {"id": cid, "reasoning": f"echoes label for {cid}", "score": v}
                    for cid, v in labels.items()
                ],
                "total_score": reported,
            }
        )

    record = execute_run(
        ws.latest_config("rules"),
        responses,
        ScriptedProvider(script),
        ws.runs,
        assessment=ws.assessment("rules"),
        rubric=rubric,
        exemplars={
            eid: ws.exemplar_store("rules").get(eid)
            for eid in ws.latest_config("rules").exemplar_ids
        },
        run_id="discrepancy-32",
        split_name="test",
    )
    assert record.status == "complete"
    flagged = [r for r in record.results if r.discrepancy is not None]
    assert len(flagged) == 7
    assert {r.response_id for r in flagged} == under_ids
    assert all(
        (r.discrepancy.kind, r.discrepancy.magnitude) == ("under", 1) for r in flagged
    )


# ---------------------------------------------------------------------------
# 5. prompt determinism


def test_prompt_determinism(workspace):
    golden_hashes = json.loads((GOLDENS / "goldens.json").read_text())
    for aid in ("rules", "debugging", "engineering"):
        config = workspace.latest_config(aid)
        first = workspace.assemble(config)
        # canonical section order
        positions = [CANONICAL_ORDER.index(k) for k in first.section_kinds()]
        assert positions == sorted(positions)
        # byte-identical across 100 repeated assemblies
        for _ in range(100):
            again = workspace.assemble(config)
            assert again.full_text == first.full_text
            assert again.config_hash == first.config_hash
        # pinned golden text and hash
        digest = hashlib.sha256(first.full_text.encode("utf-8")).hexdigest()
        assert digest == golden_hashes[aid], f"{aid} prompt deviates from golden"
        assert first.full_text == (GOLDENS / f"{aid}_prompt.txt").read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# 6. token-budget guard


def test_token_budget_guard(workspace):
    config = workspace.latest_config("debugging")
    assert config.token_budget == 8192
    base = workspace.assemble(config)
    assert base.estimated_tokens <= 8192

    grown = dataclasses.replace(
        config, exemplar_ids=(*config.exemplar_ids, "debug-ex7")
    )
    with pytest.raises(TokenBudgetExceeded) as exc:
        workspace.assemble(grown, allow_unbalanced=True)
    detail = exc.value.detail
    assert detail["budget"] == 8192
    assert detail["overshoot"] > 0
    assert detail["largest_sections"][0][0] == "few_shot"


# ---------------------------------------------------------------------------
# 7. trend labeling


def test_trend_labeling(workspace):
    from test_hitl import run_record  # synthetic complete-run builder

    rubric = workspace.rubric("rules")
    ones = {f"R{i}": 1 for i in range(1, 10)}

    def flip(base, cid, value):
        out = dict(base)
        out[cid] = value
        return out

    # overall FP=19, FN=2 -> overscoring
    rows = [(f"fp{i}", flip(ones, "R2", 0), dict(ones), None) for i in range(19)]
    rows += [(f"fn{i}", dict(ones), flip(ones, "R3", 0), None) for i in range(2)]
    report = detect_trends(run_record(rubric, rows), rubric)
    assert (report.overall.fp, report.overall.fn) == (19, 2)
    assert report.overall.label == "overscoring"

    # FP == FN > 0 -> balanced
    rows = [(f"fp{i}", flip(ones, "R2", 0), dict(ones), None) for i in range(4)]
    rows += [(f"fn{i}", dict(ones), flip(ones, "R3", 0), None) for i in range(4)]
    report = detect_trends(run_record(rubric, rows), rubric)
    assert report.overall.label == "balanced"

    # FN:FP = 9:1 -> underscoring
    rows = [(f"fn{i}", dict(ones), flip(ones, "R9", 0), None) for i in range(9)]
    rows += [("fp0", flip(ones, "R9", 0), dict(ones), None)]
    report = detect_trends(run_record(rubric, rows), rubric)
    assert (report.per_criterion["R9"].fp, report.per_criterion["R9"].fn) == (1, 9)
    assert report.per_criterion["R9"].label == "underscoring"
    assert report.overall.label == "underscoring"


# ---------------------------------------------------------------------------
# 8. active-learning loop


def test_active_learning_loop(workspace):
    ws = workspace
    ws.make_split("rules", test_fraction=0.2, seed=3)
    rubric = ws.rubric("rules")
    designated = ("R2", "R5")

    # base config without corrective chains for the designated criteria
    base = dataclasses.replace(
        ws.latest_config("rules"), exemplar_ids=("rules-ex1", "rules-ex2", "rules-ex3")
    )
    ws.save_config(base)
    responses = ws.responses("rules")
    provider = FaultyProvider(
        rubric,
        {r.id: r for r in responses.responses},
        error_rate=0.0,
        seed=5,
        overscore_criteria=designated,
        name="skew",
    )

    first = ws.execute(base, "validation", provider, run_id="al-first", allow_unbalanced=True)
    trends_before = detect_trends(first, rubric)
    for cid in designated:
        assert trends_before.per_criterion[cid].fp > 0, "fixture must exercise the skew"
    assert trends_before.overall.label == "overscoring"

    ranking = ws.run_candidates("al-first")
    assert ranking.candidates
    top = ranking.candidates[0]
    target = responses.get(top.response_id)
    answer = next(iter(target.parts.values()))
    chains = {
        cid: CotChain(
            citation=answer[:24],
            text=(
                f"The student says '{answer[:24]}' but never explicitly sets the "
                f"value that {cid} requires. Based on the rubric, the student "
                f"earned a score of 0."
            ),
        )
        for cid in top.erring_criteria
    }

    promotion = ws.promote("al-first", top.response_id, chains)
    assert promotion.exemplar.kind == "active_learning"

    # the single-instance quota holds for this loop iteration
    with pytest.raises(IterationQuotaExceeded):
        ws.promote("al-first", top.response_id, chains)

    second = ws.execute(
        promotion.config, "validation", provider, run_id="al-second", allow_unbalanced=True
    )
    trends_after = detect_trends(second, rubric)
    for cid in top.erring_criteria:
        assert trends_after.per_criterion[cid].fp < trends_before.per_criterion[cid].fp, (
            f"promotion must strictly reduce false positives on {cid}"
        )


# ---------------------------------------------------------------------------
# 9. IRR gate


def test_irr_gate_property_suite(workspace):
    rubric = workspace.rubric("rules")
    rng = random.Random(4242)
    ids = [f"s{i:03d}" for i in range(30)]

    for round_no in range(25):
        agreement = rng.uniform(0.3, 1.0)
        session = open_irr_session(
            ids, fraction=0.4, seed=round_no, raters=("ann", "bo"),
            session_id=f"prop-{round_no}",
        )
        sample = session.current.sample
        a_scores, b_scores, pooled = {}, {}, []
        for rid in sample:
            a_vals, b_vals = {}, {}
            for cid in rubric.criterion_ids():
                a = rng.randint(0, 1)
                b = a if rng.random() < agreement else 1 - a
                a_vals[cid], b_vals[cid] = a, b
                pooled.append((a, b))
            a_scores[rid] = make_score_vector(rubric, a_vals)
            b_scores[rid] = make_score_vector(rubric, b_vals)
        record_scores(session, "ann", a_scores)
        record_scores(session, "bo", b_scores)
        kappa, consensus = compute_session_kappa(session, rubric)

        expected_kappa = brute_force_cohen(pooled, 0, 1)
        assert kappa == pytest.approx(expected_kappa, abs=1e-12)
        assert consensus == (kappa >= KAPPA_GATE)
        assert (session.status == STATUS_CONSENSUS) == consensus
        if session.status == STATUS_CONSENSUS:
            assert kappa >= KAPPA_GATE  # gate monotonicity


def test_irr_sampled_ids_always_withheld(workspace):
    ws = workspace
    labels = {r.id: r.human_scores for r in ws.responses("rules").responses}
    for seed in range(5):
        session = ws.open_session("rules", fraction=0.2, seed=seed,
                                  raters=("ann", "bo"), session_id=f"gate-{seed}")
        sample = session.current.sample
        record_scores(session, "ann", {rid: labels[rid] for rid in sample})
        record_scores(session, "bo", {rid: labels[rid] for rid in sample})
        kappa, consensus = compute_session_kappa(session, ws.rubric("rules"))
        assert consensus  # identical raters
        ws.save_session(session)

        assert set(sample) <= set(ws.withheld("rules"))
        train, test = ws.make_split("rules", test_fraction=0.2, seed=seed + 100)
        assert not (set(sample) & set(test))
        assert set(sample) <= set(train)
