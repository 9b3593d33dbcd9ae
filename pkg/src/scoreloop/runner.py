"""Run execution: score a split, pair with human labels, persist immutably.

A run directory holds a manifest plus one JSONL outcome line per response
(either a parsed result or a recorded error). Outcome lines are appended as
responses finish, so a crashed run resumes by re-sending only the ids that
have no outcome yet. Completed records never change; loading and
re-serializing one yields byte-identical documents.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .corpus import Exemplar, StudentResponse
from .errors import PromptError, RunNotFound, ScoreloopError
from .gateway import LLMResult, Provider, RawCompletion, complete, parse_output
from .prompting import Prompt, PromptConfig, assemble_prompt, render_instance
from .rubric import Assessment, MultiLabelBinary, Rubric, ScoreVector, make_score_vector

DEFAULT_PARALLELISM = 4


@dataclass(frozen=True)
class Discrepancy:
    kind: str  # under | over
    magnitude: int


def detect_total_discrepancy(llm: LLMResult, rubric: Rubric) -> Discrepancy | None:
    """None iff the stated total equals the sum of the model's own subscores."""
    scheme = rubric.scheme
    if isinstance(scheme, MultiLabelBinary):
        subscore_sum = sum(c.points * llm.scores[c.id] for c in scheme.criteria)
    else:
        subscore_sum = llm.scores["score"]
    diff = llm.reported_total - subscore_sum
    if diff == 0:
        return None
    return Discrepancy(kind="under" if diff < 0 else "over", magnitude=abs(diff))


@dataclass(frozen=True)
class ScoredResult:
    response_id: str
    llm: LLMResult
    human: ScoreVector | None = None
    matches: dict[str, bool] | None = None  # present iff human labels present
    discrepancy: Discrepancy | None = None


@dataclass(frozen=True)
class RunError:
    response_id: str
    code: str
    message: str


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    config_hash: str
    provider_id: str
    assessment_id: str
    split_name: str
    split_ids: tuple[str, ...]
    started: float
    finished: float | None
    status: str  # running | complete | failed
    results: tuple[ScoredResult, ...] = ()
    error_log: tuple[RunError, ...] = ()

    def result_for(self, response_id: str) -> ScoredResult | None:
        for r in self.results:
            if r.response_id == response_id:
                return r
        return None


def score_result(
    response: StudentResponse, llm: LLMResult, rubric: Rubric
) -> ScoredResult:
    matches = None
    if response.human_scores is not None:
        human = response.human_scores.as_mapping()
        matches = {cid: llm.scores[cid] == human[cid] for cid in rubric.criterion_ids()}
    return ScoredResult(
        response_id=response.id,
        llm=llm,
        human=response.human_scores,
        matches=matches,
        discrepancy=detect_total_discrepancy(llm, rubric),
    )


# ---------------------------------------------------------------------------
# persistence


def result_to_line(res: ScoredResult) -> dict[str, Any]:
    raw = res.llm.raw
    doc: dict[str, Any] = {
        "response_id": res.response_id,
        "result": {
            "scores": res.llm.scores,
            "reasoning": res.llm.reasoning,
            "reported_total": res.llm.reported_total,
            "raw": {
                "finish_reason": raw.finish_reason if raw else "stop",
                "usage": dict(raw.usage) if raw else {},
                "latency_s": raw.latency_s if raw else 0.0,
                "attempts": raw.attempts if raw else 1,
            },
        },
    }
    if res.human is not None:
        doc["human"] = res.human.as_mapping() if isinstance(res.human.values, dict) else {
            "score": res.human.values
        }
        doc["matches"] = res.matches
    if res.discrepancy is not None:
        doc["discrepancy"] = {
            "kind": res.discrepancy.kind,
            "magnitude": res.discrepancy.magnitude,
        }
    return doc


def result_from_line(doc: dict[str, Any], rubric: Rubric) -> ScoredResult:
    payload = doc["result"]
    raw_doc = payload.get("raw") or {}
    llm = LLMResult(
        scores={str(k): int(v) for k, v in payload["scores"].items()},
        reasoning={str(k): str(v) for k, v in payload["reasoning"].items()},
        reported_total=int(payload["reported_total"]),
        raw=RawCompletion(
            text="",
            finish_reason=str(raw_doc.get("finish_reason", "stop")),
            usage={str(k): int(v) for k, v in (raw_doc.get("usage") or {}).items()},
            latency_s=float(raw_doc.get("latency_s", 0.0)),
            attempts=int(raw_doc.get("attempts", 1)),
        ),
    )
    human = None
    matches = None
    if "human" in doc:
        human = make_score_vector(rubric, doc["human"])
        matches = {str(k): bool(v) for k, v in (doc.get("matches") or {}).items()}
    discrepancy = None
    if doc.get("discrepancy"):
        discrepancy = Discrepancy(
            kind=doc["discrepancy"]["kind"], magnitude=int(doc["discrepancy"]["magnitude"])
        )
    return ScoredResult(
        response_id=str(doc["response_id"]),
        llm=llm,
        human=human,
        matches=matches,
        discrepancy=discrepancy,
    )


def _canonical(doc: dict[str, Any]) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class RunStore:
    """Filesystem layout: runs/<run_id>/manifest.json + results.jsonl."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def list_runs(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "manifest.json").exists()
        )

    def next_run_id(self, prefix: str) -> str:
        n = 1
        while (self.root / f"{prefix}-{n:04d}").exists():
            n += 1
        return f"{prefix}-{n:04d}"

    def write_manifest(self, manifest: dict[str, Any]) -> None:
        run_dir = self.run_dir(manifest["run_id"])
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "manifest.json").write_text(
            _canonical(manifest) + "\n", encoding="utf-8"
        )

    def read_manifest(self, run_id: str) -> dict[str, Any]:
        path = self.run_dir(run_id) / "manifest.json"
        if not path.exists():
            raise RunNotFound(f"no run {run_id!r}", run=run_id)
        return json.loads(path.read_text(encoding="utf-8"))

    def append_outcome(self, run_id: str, line: dict[str, Any]) -> None:
        with (self.run_dir(run_id) / "results.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(_canonical(line) + "\n")

    def read_outcomes(self, run_id: str) -> list[dict[str, Any]]:
        path = self.run_dir(run_id) / "results.jsonl"
        if not path.exists():
            return []
        return [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def load_run(self, run_id: str, rubric: Rubric) -> RunRecord:
        manifest = self.read_manifest(run_id)
        results: list[ScoredResult] = []
        errors: list[RunError] = []
        for line in self.read_outcomes(run_id):
            if "result" in line:
                results.append(result_from_line(line, rubric))
            else:
                err = line["error"]
                errors.append(
                    RunError(
                        response_id=str(line["response_id"]),
                        code=str(err["code"]),
                        message=str(err["message"]),
                    )
                )
        return RunRecord(
            run_id=manifest["run_id"],
            config_hash=manifest["config_hash"],
            provider_id=manifest["provider"],
            assessment_id=manifest["assessment"],
            split_name=manifest["split"],
            split_ids=tuple(manifest["split_ids"]),
            started=manifest["started"],
            finished=manifest.get("finished"),
            status=manifest["status"],
            results=tuple(results),
            error_log=tuple(errors),
        )

    def serialized_documents(self, run_id: str) -> tuple[str, str]:
        """Raw (manifest, results) text, for content round-trip checks."""
        run_dir = self.run_dir(run_id)
        manifest = (run_dir / "manifest.json").read_text(encoding="utf-8")
        results_path = run_dir / "results.jsonl"
        results = results_path.read_text(encoding="utf-8") if results_path.exists() else ""
        return manifest, results

    def reserialize(self, run_id: str, rubric: Rubric) -> tuple[str, str]:
        """Re-serialize a loaded record; must equal the on-disk documents."""
        record = self.load_run(run_id, rubric)
        manifest = _canonical(run_manifest_doc(record)) + "\n"
        by_id: dict[str, dict[str, Any]] = {}
        for res in record.results:
            by_id[res.response_id] = result_to_line(res)
        for err in record.error_log:
            by_id[err.response_id] = {
                "response_id": err.response_id,
                "error": {"code": err.code, "message": err.message},
            }
        # preserve on-disk outcome order
        lines = [
            _canonical(by_id[line["response_id"]])
            for line in self.read_outcomes(run_id)
        ]
        return manifest, "".join(line + "\n" for line in lines)


def run_manifest_doc(record: RunRecord) -> dict[str, Any]:
    return {
        "run_id": record.run_id,
        "config_hash": record.config_hash,
        "provider": record.provider_id,
        "assessment": record.assessment_id,
        "split": record.split_name,
        "split_ids": list(record.split_ids),
        "started": record.started,
        "finished": record.finished,
        "status": record.status,
    }


# ---------------------------------------------------------------------------
# execution


def execute_run(
    config: PromptConfig,
    split_responses: Sequence[StudentResponse],
    provider: Provider,
    store: RunStore,
    assessment: Assessment,
    rubric: Rubric,
    exemplars: Mapping[str, Exemplar],
    linked: Mapping[str, tuple[Assessment, Rubric]] | None = None,
    run_id: str | None = None,
    split_name: str = "test",
    parallelism: int | None = None,
    allow_unbalanced: bool = False,
) -> RunRecord:
    """Score every response in the split, resuming any half-finished run.

    The prompt must assemble within budget before any call goes out. Gateway
    and parse errors are recorded per response and the run continues; the
    record is persisted before its status flips to complete.
    """
    if not split_responses:
        raise ScoreloopError("split is empty")
    try:
        prompt: Prompt = assemble_prompt(
            config,
            assessment=assessment,
            rubric=rubric,
            exemplars=exemplars,
            linked=linked,
            allow_unbalanced=allow_unbalanced,
        )
    except ScoreloopError as exc:
        raise PromptError(f"prompt assembly failed: {exc.message}", cause=exc.code) from exc

    if run_id is None:
        run_id = store.next_run_id(f"{assessment.id}-{split_name}")
    workers = parallelism or provider.config.parallelism or DEFAULT_PARALLELISM

    split_ids = tuple(r.id for r in split_responses)
    existing = {line["response_id"] for line in store.read_outcomes(run_id)}
    started = time.time()
    if store.run_dir(run_id).joinpath("manifest.json").exists():
        previous = store.read_manifest(run_id)
        if previous["status"] == "complete":
            return store.load_run(run_id, rubric)  # complete runs are immutable
        started = previous["started"]

    manifest = {
        "run_id": run_id,
        "config_hash": prompt.config_hash,
        "provider": provider.config.name,
        "assessment": assessment.id,
        "split": split_name,
        "split_ids": list(split_ids),
        "started": started,
        "finished": None,
        "status": "running",
    }
    store.write_manifest(manifest)

    pending = [r for r in split_responses if r.id not in existing]
    write_lock = threading.Lock()

    def score_one(response: StudentResponse) -> tuple[str, dict[str, Any]]:
        task_text = prompt.full_text + "\n\n" + render_instance(response)
        try:
            raw = complete(provider, task_text, run_id=run_id)
            llm = parse_output(raw, rubric)
            return response.id, result_to_line(score_result(response, llm, rubric))
        except ScoreloopError as exc:
            return response.id, {
                "response_id": response.id,
                "error": {"code": exc.code, "message": exc.message},
            }

    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(score_one, r) for r in pending]
            for fut in as_completed(futures):
                _, line = fut.result()
                with write_lock:
                    store.append_outcome(run_id, line)
    except BaseException:
        manifest["status"] = "failed"
        manifest["finished"] = time.time()
        store.write_manifest(manifest)
        raise

    manifest["status"] = "complete"
    manifest["finished"] = time.time()
    store.write_manifest(manifest)
    return store.load_run(run_id, rubric)
