#!/usr/bin/env python3
"""Walk the full scoring loop offline, printing each stage.

Creates a throwaway workspace from the shipped fixtures, then:
  1. splits the rules responses with the leakage rule,
  2. runs an IRR session to consensus and withholds its sample,
  3. scores the test split with the echo mock and prints the metrics table,
  4. scores the validation split with a systematically overscoring mock,
  5. detects the trend, ranks candidates, promotes the top one, reruns,
     and shows the false-positive reduction.

Usage: python scripts/run_demo.py [workdir]
"""

from __future__ import annotations

import dataclasses
import sys
import tempfile
from pathlib import Path

from scoreloop.corpus import CotChain
from scoreloop.gateway import EchoLabelsProvider, FaultyProvider
from scoreloop.hitl import compute_session_kappa, detect_trends, record_scores
from scoreloop.metrics import format_metrics_table
from scoreloop.store import Workspace


def main() -> None:
    if len(sys.argv) > 1:
        root = Path(sys.argv[1])
        ws = Workspace.init(root / "data")
    else:
        tmp = tempfile.TemporaryDirectory()
        ws = Workspace.init(Path(tmp.name) / "data")
    print(f"workspace: {ws.root}\n")

    rubric = ws.rubric("rules")
    responses = ws.responses("rules")
    by_id = {r.id: r for r in responses.responses}

    print("== IRR session (both raters agree, so the gate passes) ==")
    session = ws.open_session("rules", fraction=0.2, seed=7, raters=("ann", "bo"))
    sample = session.current.sample
    labels = {rid: by_id[rid].human_scores for rid in sample}
    record_scores(session, "ann", labels)
    record_scores(session, "bo", labels)
    kappa, consensus = compute_session_kappa(session, rubric)
    ws.save_session(session)
    print(f"sampled {len(sample)} ids, kappa={kappa:.2f}, consensus={consensus}")
    print(f"withheld from test: {len(ws.withheld('rules'))} ids\n")

    train, test = ws.make_split("rules", test_fraction=0.2, seed=3)
    print(f"== split == {len(train)} train / {len(test)} test\n")

    print("== echo-mock run over the test split ==")
    echo = EchoLabelsProvider(rubric, by_id)
    record = ws.execute(ws.latest_config("rules"), "test", echo, run_id="demo-echo")
    print(format_metrics_table(ws.run_metrics("demo-echo")))
    print()

    print("== overscoring mock on the validation split ==")
    base = dataclasses.replace(
        ws.latest_config("rules"), exemplar_ids=("rules-ex1", "rules-ex2", "rules-ex3")
    )
    skew = FaultyProvider(rubric, by_id, overscore_criteria=("R2", "R5"), name="skew")
    first = ws.execute(base, "validation", skew, run_id="demo-al-1", allow_unbalanced=True)
    before = detect_trends(first, rubric)
    print(f"overall trend: {before.overall.label} "
          f"(fp={before.overall.fp}, fn={before.overall.fn})")

    ranking = ws.run_candidates("demo-al-1")
    top = ranking.candidates[0]
    print(f"top candidate: {top.response_id} score={top.score:g} "
          f"erring={','.join(top.erring_criteria)}")

    answer = next(iter(by_id[top.response_id].parts.values()))
    chains = {
        cid: CotChain(
            citation=answer[:24],
            text=(f"The student says '{answer[:24]}' but never explicitly sets the "
                  f"value that {cid} requires. Based on the rubric, the student "
                  f"earned a score of 0."),
        )
        for cid in top.erring_criteria
    }
    promotion = ws.promote("demo-al-1", top.response_id, chains)
    print(f"promoted {promotion.exemplar.id} into a new config\n")

    second = ws.execute(promotion.config, "validation", skew,
                        run_id="demo-al-2", allow_unbalanced=True)
    after = detect_trends(second, rubric)
    for cid in top.erring_criteria:
        print(f"{cid}: fp {before.per_criterion[cid].fp} -> {after.per_criterion[cid].fp}")
    print("\ndone: the promoted exemplar corrected the scoring trend")


if __name__ == "__main__":
    main()
