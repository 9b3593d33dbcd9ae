"""Command-line interface.

    scoreloop init      --data DIR [--no-fixtures]
    scoreloop ingest    --assessment ID --file PATH --format jsonl|csv
    scoreloop split     --assessment ID [--fraction F] [--seed N]
    scoreloop prompt    --config HASH_OR_PATH [--out FILE]
    scoreloop score     --assessment ID --split NAME --provider NAME --config HASH_OR_PATH
    scoreloop metrics   --run ID [--json] [--csv DIR]
    scoreloop irr       open|score|status|resolve ...
    scoreloop al        trends|rank|promote ...
    scoreloop serve     [--host H] [--port P]

Every command reads the workspace named by --data (default ./data or
$SCORELOOP_DATA).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import hitl
from .corpus import CotChain
from .errors import ScoreloopError
from .metrics import format_metrics_table
from .prompting import config_from_doc, config_hash
from .rubric import make_score_vector
from .store import Workspace


def _workspace(args) -> Workspace:
    return Workspace(args.data)


def _resolve_config(ws: Workspace, ref: str):
    """A config reference is either a file path or a stored hash (prefix)."""
    path = Path(ref)
    if path.exists():
        config = config_from_doc(json.loads(path.read_text(encoding="utf-8")))
        ws.save_config(config)
        return config
    return ws.load_config(ref)


def cmd_init(args) -> int:
    ws = Workspace.init(args.data, with_fixtures=not args.no_fixtures)
    print(f"initialized workspace at {ws.root}")
    return 0


def cmd_ingest(args) -> int:
    ws = _workspace(args)
    rs = ws.ingest(args.assessment, args.file, args.format)
    print(f"ingested {len(rs)} responses for {args.assessment}")
    for err in rs.errors:
        print(f"  row {err.row}: {err.code}: {err.message}", file=sys.stderr)
    return 0 if not rs.errors else 1


def cmd_split(args) -> int:
    ws = _workspace(args)
    train, test = ws.make_split(args.assessment, args.fraction, args.seed)
    withheld = ws.withheld(args.assessment)
    print(
        f"{args.assessment}: {len(train)} train / {len(test)} test"
        f" ({len(withheld)} ids withheld from test)"
    )
    return 0


def cmd_prompt(args) -> int:
    ws = _workspace(args)
    config = _resolve_config(ws, args.config)
    prompt = ws.assemble(config, allow_unbalanced=args.allow_unbalanced)
    if args.out:
        Path(args.out).write_text(prompt.full_text, encoding="utf-8")
        print(f"wrote {prompt.estimated_tokens} estimated tokens to {args.out}")
    else:
        print(prompt.full_text)
    return 0


def cmd_score(args) -> int:
    ws = _workspace(args)
    config = _resolve_config(ws, args.config)
    if args.assessment and config.assessment_id != args.assessment:
        raise ScoreloopError(
            f"config targets {config.assessment_id!r}, not {args.assessment!r}"
        )
    provider = ws.build_provider(args.provider, config.assessment_id)
    record = ws.execute(
        config,
        args.split,
        provider,
        run_id=args.run_id,
        parallelism=args.parallelism,
        allow_unbalanced=args.allow_unbalanced,
    )
    print(
        f"run {record.run_id}: {record.status}, {len(record.results)} results,"
        f" {len(record.error_log)} errors"
    )
    return 0


def cmd_metrics(args) -> int:
    ws = _workspace(args)
    metrics = ws.run_metrics(args.run)
    if args.json:
        print(json.dumps(metrics.to_doc(), indent=2))
    else:
        print(format_metrics_table(metrics))
    if args.csv:
        out_dir = Path(args.csv)
        out_dir.mkdir(parents=True, exist_ok=True)
        for rep in metrics.per_criterion:
            path = out_dir / f"{args.run}_{rep.criterion_id}.csv"
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow([""] + [str(i) for i in range(len(rep.confusion))])
                for i, row in enumerate(rep.confusion):
                    writer.writerow([str(i)] + [str(v) for v in row])
        print(f"confusion matrices written to {out_dir}")
    return 0


def cmd_irr(args) -> int:
    ws = _workspace(args)
    if args.irr_cmd == "open":
        session = ws.open_session(
            args.assessment,
            fraction=args.fraction,
            seed=args.seed,
            raters=tuple(args.raters.split(",")),
            session_id=args.session_id,
        )
        print(f"session {session.session_id}: sampled {len(session.current.sample)} ids")
        for rid in session.current.sample:
            print(f"  {rid}")
        return 0
    if args.irr_cmd == "score":
        session = ws.load_session(args.session)
        rubric = ws.rubric_for(session.assessment_id)
        raw = json.loads(Path(args.file).read_text(encoding="utf-8"))
        scores = {rid: make_score_vector(rubric, values) for rid, values in raw.items()}
        hitl.record_scores(session, args.rater, scores)
        rnd = session.current
        if all(set(rnd.scores.get(r, {})) >= set(rnd.sample) for r in session.raters):
            kappa, consensus = hitl.compute_session_kappa(session, rubric)
            print(f"kappa={kappa:.3f} gate={'consensus' if consensus else 'needs_resample'}")
        else:
            print(f"recorded {len(scores)} scores for {args.rater}")
        ws.save_session(session)
        return 0
    if args.irr_cmd == "status":
        session = ws.load_session(args.session)
        rubric = ws.rubric_for(session.assessment_id)
        print(f"session {session.session_id}: {session.status}")
        print(f"kappa history: {[round(k, 3) for k in session.kappa_history()]}")
        if session.current.kappa is not None:
            diag = hitl.per_criterion_kappa(session, rubric)
            per = " ".join(f"{cid}={k:.2f}" for cid, k in diag.items())
            print(f"qwk (diagnostic): {session.current.qwk:.3f}")
            print(f"per-criterion kappa (diagnostic): {per}")
        live = hitl.disagreements(session, rubric)
        for rid, cid in live:
            print(f"  disagreement: {rid} {cid}")
        return 0
    if args.irr_cmd == "resolve":
        session = ws.load_session(args.session)
        rubric = ws.rubric_for(session.assessment_id)
        session, point = hitl.resolve_disagreement(
            session, rubric, args.response, args.criterion, args.value, note=args.note
        )
        if point is not None:
            if args.guideline:
                ws.append_guideline(rubric.id, args.guideline)
                point.spawned_guideline = args.guideline
            ws.save_sticking_point(point)
            print(f"sticking point {point.id} recorded")
        ws.save_session(session)
        print(f"resolved ({args.response}, {args.criterion}) -> {args.value}")
        return 0
    raise ScoreloopError(f"unknown irr subcommand {args.irr_cmd!r}")


def cmd_al(args) -> int:
    ws = _workspace(args)
    if args.al_cmd == "trends":
        report = ws.run_trends(args.run, args.threshold)
        print(f"run {args.run}: overall {report.overall.label}"
              f" (fp={report.overall.fp}, fn={report.overall.fn})")
        for cid, cell in report.per_criterion.items():
            print(f"  {cid:8s} fp={cell.fp:<3d} fn={cell.fn:<3d} {cell.label}")
        return 0
    if args.al_cmd == "rank":
        ranking = ws.run_candidates(args.run)
        if not ranking.candidates:
            print("no candidates: every labeled instance was scored correctly")
            return 0
        for c in ranking.candidates:
            print(
                f"{c.response_id}: score={c.score:g} delta={c.total_delta}"
                f" trend_matches={c.trend_match_count} struggling={c.struggling_criterion_hits}"
                f" erring={','.join(c.erring_criteria)}"
            )
        return 0
    if args.al_cmd == "promote":
        raw = json.loads(Path(args.cot).read_text(encoding="utf-8"))
        chains = {
            cid: CotChain(citation=str(c["citation"]), text=str(c["text"]))
            for cid, c in raw.items()
        }
        promotion = ws.promote(args.run, args.response, chains, exemplar_id=args.exemplar_id)
        print(f"promoted {promotion.exemplar.id}")
        print(f"new config {config_hash(promotion.config)}")
        if promotion.balance.violations:
            print("balance violations remain:")
            for v in promotion.balance.violations:
                print(f"  {v}")
        return 0
    raise ScoreloopError(f"unknown al subcommand {args.al_cmd!r}")


def cmd_serve(args) -> int:
    from .service import serve

    print(f"serving {args.data} on http://{args.host}:{args.port}")
    serve(args.data, host=args.host, port=args.port, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scoreloop", description=__doc__)
    parser.add_argument(
        "--data",
        default=os.environ.get("SCORELOOP_DATA", "data"),
        help="workspace directory (default ./data or $SCORELOOP_DATA)",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("init", help="create a workspace with the shipped fixtures")
    p.add_argument("--no-fixtures", action="store_true")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("ingest", help="load student responses")
    p.add_argument("--assessment", required=True)
    p.add_argument("--file", required=True)
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="compute the train/test partition")
    p.add_argument("--assessment", required=True)
    p.add_argument("--fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("prompt", help="render a prompt config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--allow-unbalanced", action="store_true")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("score", help="execute a scoring run over a split")
    p.add_argument("--assessment")
    p.add_argument("--split", choices=("train", "validation", "test"), required=True)
    p.add_argument("--provider", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--run-id")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--allow-unbalanced", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("metrics", help="agreement metrics for a run")
    p.add_argument("--run", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--csv", help="directory for confusion-matrix CSV export")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("irr", help="inter-rater reliability sessions")
    irr_sub = p.add_subparsers(dest="irr_cmd", required=True)
    q = irr_sub.add_parser("open")
    q.add_argument("--assessment", required=True)
    q.add_argument("--fraction", type=float, default=0.2)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--raters", default="rater_a,rater_b")
    q.add_argument("--session-id")
    q = irr_sub.add_parser("score")
    q.add_argument("--session", required=True)
    q.add_argument("--rater", required=True)
    q.add_argument("--file", required=True, help="JSON: response id -> score values")
    q = irr_sub.add_parser("status")
    q.add_argument("--session", required=True)
    q = irr_sub.add_parser("resolve")
    q.add_argument("--session", required=True)
    q.add_argument("--response", required=True)
    q.add_argument("--criterion", required=True)
    q.add_argument("--value", type=int, required=True)
    q.add_argument("--note")
    q.add_argument("--guideline")
    p.set_defaults(func=cmd_irr)

    p = sub.add_parser("al", help="scoring trends and exemplar promotion")
    al_sub = p.add_subparsers(dest="al_cmd", required=True)
    q = al_sub.add_parser("trends")
    q.add_argument("--run", required=True)
    q.add_argument("--threshold", type=float, default=2.0)
    q = al_sub.add_parser("rank")
    q.add_argument("--run", required=True)
    q = al_sub.add_parser("promote")
    q.add_argument("--run", required=True)
    q.add_argument("--response", required=True)
    q.add_argument("--cot", required=True, help="JSON: criterion -> {citation, text}")
    q.add_argument("--exemplar-id")
    p.set_defaults(func=cmd_al)

    p = sub.add_parser("serve", help="run the local review service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8421)
    p.add_argument("--ui", help="directory of built UI assets to host at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScoreloopError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
