"""Local HTTP+JSON review service.

Read endpoints never mutate; mutating endpoints delegate to the workspace
and inherit its transactional guarantees. Run execution is asynchronous:
POST /runs answers 202 with a job id whose status is pollable at
GET /runs/{id}. Mutating endpoints are idempotent under retry via a
client-supplied ``request_id``. Error payloads mirror the module error
registry as ``{code, message, detail}``.
"""

from __future__ import annotations

import errno
import json
import queue
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from . import hitl
from .corpus import CotChain
from .errors import (
    DataDirMissing,
    ExemplarConflict,
    IterationQuotaExceeded,
    NoSuchDisagreement,
    NotFound,
    PortInUse,
    RunNotFound,
    ScoreloopError,
    TokenBudgetExceeded,
    UnknownExemplar,
)
from .rubric import assessment_to_doc, rubric_to_doc
from .runner import result_to_line, run_manifest_doc
from .store import Workspace

CONFLICT_ERRORS = (IterationQuotaExceeded, TokenBudgetExceeded, ExemplarConflict)
NOT_FOUND_ERRORS = (NotFound, RunNotFound, UnknownExemplar, NoSuchDisagreement)


def _status_for(exc: ScoreloopError) -> int:
    if isinstance(exc, CONFLICT_ERRORS):
        return 409
    if isinstance(exc, NOT_FOUND_ERRORS):
        return 404
    return 400


class JobExecutor:
    """One background worker; keeps scoring-runner's own parallelism bound
    as the only source of concurrency inside a run."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace
        self.queue: "queue.Queue[dict[str, Any]]" = queue.Queue()
        self.jobs: dict[str, dict[str, Any]] = {}
        self.lock = threading.Lock()
        self.thread = threading.Thread(target=self._loop, daemon=True)
        self.thread.start()

    def submit(self, spec: dict[str, Any]) -> str:
        run_id = spec["run_id"]
        with self.lock:
            self.jobs[run_id] = {"status": "queued"}
        self.queue.put(spec)
        return run_id

    def status(self, run_id: str) -> dict[str, Any] | None:
        with self.lock:
            return dict(self.jobs[run_id]) if run_id in self.jobs else None

    def _loop(self) -> None:
        while True:
            spec = self.queue.get()
            run_id = spec["run_id"]
            with self.lock:
                self.jobs[run_id] = {"status": "running"}
            try:
                config = self.workspace.load_config(spec["config"])
                provider = self.workspace.build_provider(
                    spec["provider"], config.assessment_id
                )
                self.workspace.execute(
                    config,
                    spec["split"],
                    provider,
                    run_id=run_id,
                    parallelism=spec.get("parallelism"),
                    allow_unbalanced=bool(spec.get("allow_unbalanced")),
                )
                with self.lock:
                    self.jobs[run_id] = {"status": "complete"}
            except Exception as exc:  # job errors surface through polling
                payload = (
                    exc.to_payload()
                    if isinstance(exc, ScoreloopError)
                    else {"code": "Internal", "message": str(exc), "detail": {}}
                )
                with self.lock:
                    self.jobs[run_id] = {"status": "failed", "error": payload}


def create_app(workspace: Workspace, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="scoreloop review service", openapi_url="/api-schema")
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    executor = JobExecutor(workspace)
    idempotency: dict[str, tuple[int, Any]] = {}
    idempotency_lock = threading.Lock()

    @app.exception_handler(ScoreloopError)
    async def scoreloop_error(_: Request, exc: ScoreloopError) -> JSONResponse:
        return JSONResponse(status_code=_status_for(exc), content=exc.to_payload())

    def idempotent(request_id: str | None, compute):
        if not request_id:
            return compute()
        with idempotency_lock:
            if request_id in idempotency:
                return JSONResponse(
                    status_code=idempotency[request_id][0],
                    content=idempotency[request_id][1],
                )
        response = compute()
        status, content = 200, response
        if isinstance(response, JSONResponse):
            status, content = response.status_code, json.loads(response.body)
        with idempotency_lock:
            idempotency[request_id] = (status, content)
        return response

    # -- runs ---------------------------------------------------------------

    @app.get("/runs")
    def list_runs() -> list[dict[str, Any]]:
        out = []
        for run_id in workspace.runs.list_runs():
            manifest = workspace.runs.read_manifest(run_id)
            job = executor.status(run_id)
            if job and manifest["status"] == "running":
                manifest["job"] = job["status"]
            out.append(manifest)
        return out

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict[str, Any]:
        job = executor.status(run_id)
        try:
            record = workspace.load_run(run_id)
        except (RunNotFound, NotFound):
            if job is None:
                raise
            return {"run_id": run_id, "status": job["status"], "job": job}
        doc = run_manifest_doc(record)
        if job:
            doc["job"] = job
            if job["status"] in ("queued", "running") and record.status != "complete":
                doc["status"] = job["status"]
        doc["results"] = [result_to_line(res) for res in record.results]
        doc["errors"] = [
            {"response_id": e.response_id, "code": e.code, "message": e.message}
            for e in record.error_log
        ]
        return doc

    @app.get("/runs/{run_id}/results/{response_id}")
    def get_result(run_id: str, response_id: str) -> dict[str, Any]:
        record = workspace.load_run(run_id)
        result = record.result_for(response_id)
        if result is None:
            for err in record.error_log:
                if err.response_id == response_id:
                    return {
                        "response_id": response_id,
                        "error": {"code": err.code, "message": err.message},
                    }
            raise NotFound(f"run {run_id!r} has no result for {response_id!r}")
        doc = result_to_line(result)
        response = workspace.responses(record.assessment_id).get(response_id)
        doc["parts"] = dict(response.parts)
        return doc

    @app.post("/runs", status_code=202)
    def start_run(body: dict[str, Any]):
        def compute():
            config = workspace.load_config(str(body["config"]))
            if body.get("provider") not in workspace.provider_definitions():
                raise NotFound(f"no provider {body.get('provider')!r}")
            split = str(body.get("split") or "test")
            run_id = body.get("run_id") or workspace.runs.next_run_id(
                f"{config.assessment_id}-{split}"
            )
            executor.submit(
                {
                    "run_id": run_id,
                    "config": str(body["config"]),
                    "split": split,
                    "provider": str(body["provider"]),
                    "parallelism": body.get("parallelism"),
                    "allow_unbalanced": body.get("allow_unbalanced", False),
                }
            )
            return JSONResponse(status_code=202, content={"job": run_id})

        return idempotent(body.get("request_id"), compute)

    @app.get("/runs/{run_id}/metrics")
    def run_metrics(run_id: str) -> dict[str, Any]:
        return workspace.run_metrics(run_id).to_doc()

    @app.get("/runs/{run_id}/trends")
    def run_trends(run_id: str, threshold: float = 2.0) -> dict[str, Any]:
        return workspace.run_trends(run_id, threshold).to_doc()

    @app.get("/runs/{run_id}/candidates")
    def run_candidates(run_id: str) -> dict[str, Any]:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return workspace.run_candidates(run_id).to_doc()

    # -- IRR ------------------------------------------------------------------

    @app.get("/irr/sessions")
    def list_sessions() -> list[dict[str, Any]]:
        return [
            hitl.session_to_doc(workspace.load_session(sid))
            for sid in workspace.list_sessions()
        ]

    @app.post("/irr/sessions")
    def open_session(body: dict[str, Any]):
        def compute():
            session = workspace.open_session(
                str(body["assessment"]),
                fraction=float(body.get("fraction", 0.2)),
                seed=int(body.get("seed", 0)),
                raters=tuple(body.get("raters") or ("rater_a", "rater_b")),
                session_id=body.get("session_id"),
            )
            return hitl.session_to_doc(session)

        return idempotent(body.get("request_id"), compute)

    @app.post("/irr/sessions/{session_id}/scores")
    def post_scores(session_id: str, body: dict[str, Any]):
        def compute():
            session = workspace.load_session(session_id)
            rubric = workspace.rubric_for(session.assessment_id)
            from .rubric import make_score_vector

            scores = {
                rid: make_score_vector(rubric, values)
                for rid, values in (body.get("scores") or {}).items()
            }
            hitl.record_scores(session, str(body["rater"]), scores)
            rnd = session.current
            complete = all(
                set(rnd.scores.get(r, {})) >= set(rnd.sample) for r in session.raters
            )
            gate = None
            if complete:
                kappa, consensus = hitl.compute_session_kappa(session, rubric)
                gate = {"kappa": kappa, "consensus": consensus}
            workspace.save_session(session)
            doc = hitl.session_to_doc(session)
            if gate:
                doc["gate"] = gate
            return doc

        return idempotent(body.get("request_id"), compute)

    @app.post("/irr/sessions/{session_id}/resolutions")
    def post_resolution(session_id: str, body: dict[str, Any]):
        def compute():
            session = workspace.load_session(session_id)
            rubric = workspace.rubric_for(session.assessment_id)
            session, point = hitl.resolve_disagreement(
                session,
                rubric,
                str(body["response"]),
                str(body["criterion"]),
                int(body["value"]),
                note=body.get("note"),
            )
            guideline = body.get("guideline")
            if point is not None:
                if guideline:
                    workspace.append_guideline(rubric.id, str(guideline))
                    point.spawned_guideline = str(guideline)
                workspace.save_sticking_point(point)
            workspace.save_session(session)
            doc = hitl.session_to_doc(session)
            if point is not None:
                doc["sticking_point"] = point.id
            return doc

        return idempotent(body.get("request_id"), compute)

    # -- catalog ------------------------------------------------------------

    @app.get("/rubrics")
    def list_rubrics() -> list[dict[str, Any]]:
        return [rubric_to_doc(workspace.rubric(rid)) for rid in workspace.list_rubrics()]

    @app.get("/assessments")
    def list_assessments() -> list[dict[str, Any]]:
        return [
            assessment_to_doc(workspace.assessment(aid))
            for aid in workspace.list_assessments()
        ]

    @app.get("/configs")
    def list_configs() -> dict[str, list[str]]:
        return workspace.list_configs()

    @app.get("/configs/{config_hash}/prompt")
    def rendered_prompt(config_hash: str, allow_unbalanced: bool = False) -> PlainTextResponse:
        config = workspace.load_config(config_hash)
        prompt = workspace.assemble(config, allow_unbalanced=allow_unbalanced)
        return PlainTextResponse(prompt.full_text)

    # -- promotion ------------------------------------------------------------

    @app.post("/exemplars/promote")
    def promote(body: dict[str, Any]):
        def compute():
            chains = {
                cid: CotChain(citation=str(c["citation"]), text=str(c["text"]))
                for cid, c in (body.get("chains") or {}).items()
            }
            promotion = workspace.promote(
                str(body["run"]),
                str(body["response"]),
                chains,
                exemplar_id=body.get("exemplar_id"),
            )
            from .prompting import config_hash as hash_of

            return {
                "exemplar": promotion.exemplar.id,
                "config": hash_of(promotion.config),
                "balance_violations": list(promotion.balance.violations),
            }

        return idempotent(body.get("request_id"), compute)

    return app


def serve(
    data_dir: str | Path,
    host: str = "127.0.0.1",
    port: int = 8421,
    ui_dir: str | Path | None = None,
) -> None:
    """Run the review service over a workspace directory (blocking)."""
    import uvicorn

    if not Path(data_dir).is_dir():
        raise DataDirMissing(f"data directory {data_dir} does not exist")
    app = create_app(Workspace(data_dir), ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUse(f"port {port} is already bound") from exc
        raise
