"""Workspace: the on-disk layout every surface (CLI, service, tests) shares.

data/
  rubrics/<id>.yaml            one rubric per file
  assessments/<id>.yaml        one assessment per file
  responses/<assessment>.jsonl ingested student responses
  withheld/<assessment>.json   ids barred from test splits (IRR leakage rule)
  splits/<assessment>.json     persisted train/test partition
  exemplars/<assessment>/      versioned exemplar documents + manifest
  configs/<hash>.json          immutable prompt configs, addressed by hash
  configs/index.json           per-assessment config history
  runs/<run_id>/               manifest + results
  irr/<session>.json           IRR sessions
  sticking_points/<id>.json    promoted disagreements
  promotions.json              run id -> promoted exemplar (quota registry)
  providers.yaml               provider definitions
"""

from __future__ import annotations

import json
import shutil
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from . import hitl
from .corpus import (
    CotChain,
    Exemplar,
    ExemplarStore,
    ResponseSet,
    SplitSpec,
    StudentResponse,
    ingest_responses,
    response_from_doc,
    response_to_doc,
    split_dataset,
)
from .errors import DataDirMissing, NotFound, ScoreloopError
from .gateway import (
    EchoLabelsProvider,
    FaultyProvider,
    HttpProvider,
    Provider,
    ProviderConfig,
    ScriptedProvider,
)
from .metrics import RunMetrics, run_metrics
from .prompting import Prompt, PromptConfig, assemble_prompt, config_from_doc, config_hash, config_to_doc
from .rubric import (
    Assessment,
    Rubric,
    assessment_from_doc,
    assessment_to_doc,
    rubric_to_doc,
    validate_rubric,
)
from .runner import RunRecord, RunStore, execute_run

SUBDIRS = (
    "rubrics",
    "assessments",
    "responses",
    "withheld",
    "splits",
    "exemplars",
    "configs",
    "runs",
    "irr",
    "sticking_points",
)


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise DataDirMissing(f"data directory {self.root} does not exist")

    @classmethod
    def init(cls, root: str | Path, with_fixtures: bool = True) -> "Workspace":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        for sub in SUBDIRS:
            (root / sub).mkdir(exist_ok=True)
        ws = cls(root)
        if with_fixtures:
            ws.install_fixtures()
        return ws

    def install_fixtures(self) -> None:
        """Copy the packaged task fixtures (rubrics, assessments, exemplars,
        configs, sample responses, providers) into this workspace."""
        base = resources.files("scoreloop") / "fixtures"
        with resources.as_file(base) as src:
            for path in sorted(Path(src).rglob("*")):
                if path.is_dir():
                    continue
                rel = path.relative_to(src)
                dest = self.root / rel
                dest.parent.mkdir(parents=True, exist_ok=True)
                if not dest.exists():
                    shutil.copyfile(path, dest)
        # exemplar manifests list the shipped documents as version 0
        for ex_dir in (self.root / "exemplars").iterdir():
            if not ex_dir.is_dir() or (ex_dir / "manifest.json").exists():
                continue
            active = sorted(
                p.stem
                for p in ex_dir.glob("*.json")
                if p.name != "manifest.json" and "-al-" not in p.stem
            )
            (ex_dir / "manifest.json").write_text(
                json.dumps({"versions": [active]}, indent=2) + "\n", encoding="utf-8"
            )
        # register fixture configs in the per-assessment history
        index = self._config_index()
        for cfg_path in sorted((self.root / "configs").glob("*.json")):
            if cfg_path.name == "index.json":
                continue
            config = config_from_doc(json.loads(cfg_path.read_text(encoding="utf-8")))
            h = config_hash(config)
            target = self.root / "configs" / f"{h}.json"
            if not target.exists():
                cfg_path.rename(target)
            elif target != cfg_path:
                cfg_path.unlink()
            history = index.setdefault(config.assessment_id, [])
            if h not in history:
                history.append(h)
        self._write_config_index(index)

    # -- rubrics ------------------------------------------------------------

    def rubric_path(self, rubric_id: str) -> Path:
        return self.root / "rubrics" / f"{rubric_id}.yaml"

    def rubric(self, rubric_id: str) -> Rubric:
        path = self.rubric_path(rubric_id)
        if not path.exists():
            raise NotFound(f"no rubric {rubric_id!r}", rubric=rubric_id)
        return validate_rubric(yaml.safe_load(path.read_text(encoding="utf-8")))

    def save_rubric(self, rubric: Rubric) -> None:
        self.rubric_path(rubric.id).write_text(
            yaml.safe_dump(rubric_to_doc(rubric), sort_keys=False, allow_unicode=True),
            encoding="utf-8",
        )

    def list_rubrics(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "rubrics").glob("*.yaml"))

    def append_guideline(self, rubric_id: str, guideline: str) -> Rubric:
        rubric = self.rubric(rubric_id)
        updated = Rubric(
            id=rubric.id,
            title=rubric.title,
            scheme=rubric.scheme,
            guidelines=(*rubric.guidelines, guideline),
        )
        self.save_rubric(updated)
        return updated

    # -- assessments ----------------------------------------------------------

    def assessment(self, assessment_id: str) -> Assessment:
        path = self.root / "assessments" / f"{assessment_id}.yaml"
        if not path.exists():
            raise NotFound(f"no assessment {assessment_id!r}", assessment=assessment_id)
        return assessment_from_doc(yaml.safe_load(path.read_text(encoding="utf-8")))

    def save_assessment(self, assessment: Assessment) -> None:
        path = self.root / "assessments" / f"{assessment.id}.yaml"
        path.write_text(
            yaml.safe_dump(assessment_to_doc(assessment), sort_keys=False, allow_unicode=True),
            encoding="utf-8",
        )

    def list_assessments(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "assessments").glob("*.yaml"))

    def rubric_for(self, assessment_id: str) -> Rubric:
        return self.rubric(self.assessment(assessment_id).rubric_id)

    def linked_context(self, assessment: Assessment) -> dict[str, tuple[Assessment, Rubric]]:
        out: dict[str, tuple[Assessment, Rubric]] = {}
        for aid in assessment.linked_context:
            linked = self.assessment(aid)
            out[aid] = (linked, self.rubric(linked.rubric_id))
        return out

    # -- responses ------------------------------------------------------------

    def responses_path(self, assessment_id: str) -> Path:
        return self.root / "responses" / f"{assessment_id}.jsonl"

    def responses(self, assessment_id: str) -> ResponseSet:
        path = self.responses_path(assessment_id)
        if not path.exists():
            return ResponseSet(assessment_id=assessment_id, responses=())
        return ingest_responses(
            path, "jsonl", self.assessment(assessment_id), self.rubric_for(assessment_id)
        )

    def save_responses(self, response_set: ResponseSet) -> None:
        path = self.responses_path(response_set.assessment_id)
        with path.open("w", encoding="utf-8") as fh:
            for resp in response_set.responses:
                fh.write(json.dumps(response_to_doc(resp), ensure_ascii=False) + "\n")

    def ingest(self, assessment_id: str, source: str | Path, format: str) -> ResponseSet:
        rs = ingest_responses(
            source, format, self.assessment(assessment_id), self.rubric_for(assessment_id)
        )
        self.save_responses(rs)
        return rs

    # -- withheld ids and splits ------------------------------------------------

    def withheld(self, assessment_id: str) -> frozenset[str]:
        path = self.root / "withheld" / f"{assessment_id}.json"
        if not path.exists():
            return frozenset()
        return frozenset(json.loads(path.read_text(encoding="utf-8")))

    def add_withheld(self, assessment_id: str, ids: Iterable[str]) -> frozenset[str]:
        merged = frozenset(self.withheld(assessment_id)) | frozenset(ids)
        path = self.root / "withheld" / f"{assessment_id}.json"
        path.write_text(json.dumps(sorted(merged), indent=2) + "\n", encoding="utf-8")
        return merged

    def make_split(
        self, assessment_id: str, test_fraction: float = 0.2, seed: int = 0
    ) -> tuple[tuple[str, ...], tuple[str, ...]]:
        rs = self.responses(assessment_id)
        spec = SplitSpec(
            test_fraction=test_fraction,
            seed=seed,
            withheld_from_test=self.withheld(assessment_id),
        )
        train, test = split_dataset(rs, spec)
        doc = {
            "assessment": assessment_id,
            "test_fraction": test_fraction,
            "seed": seed,
            "withheld": sorted(spec.withheld_from_test),
            "train": list(train),
            "test": list(test),
        }
        (self.root / "splits" / f"{assessment_id}.json").write_text(
            json.dumps(doc, indent=2) + "\n", encoding="utf-8"
        )
        return train, test

    def load_split(self, assessment_id: str) -> dict[str, Any]:
        path = self.root / "splits" / f"{assessment_id}.json"
        if not path.exists():
            raise NotFound(f"no split for {assessment_id!r}; run make_split first")
        return json.loads(path.read_text(encoding="utf-8"))

    def split_responses(self, assessment_id: str, name: str) -> list[StudentResponse]:
        """Resolve a named split. The validation set is the train set minus
        the responses used as active prompt exemplars."""
        split = self.load_split(assessment_id)
        rs = self.responses(assessment_id)
        if name == "test":
            ids: Iterable[str] = split["test"]
        elif name == "train":
            ids = split["train"]
        elif name == "validation":
            exemplar_responses = {
                ex.response.id for ex in self.exemplar_store(assessment_id).active()
            }
            ids = [rid for rid in split["train"] if rid not in exemplar_responses]
        else:
            raise ScoreloopError(f"unknown split {name!r}")
        by_id = {r.id: r for r in rs.responses}
        return [by_id[rid] for rid in ids]

    # -- exemplars ------------------------------------------------------------

    def exemplar_store(self, assessment_id: str) -> ExemplarStore:
        rubric = self.rubric_for(assessment_id)
        return ExemplarStore(self.root / "exemplars" / assessment_id, rubric)

    # -- configs ------------------------------------------------------------

    def _config_index(self) -> dict[str, list[str]]:
        path = self.root / "configs" / "index.json"
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_config_index(self, index: dict[str, list[str]]) -> None:
        (self.root / "configs" / "index.json").write_text(
            json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def save_config(self, config: PromptConfig) -> str:
        h = config_hash(config)
        path = self.root / "configs" / f"{h}.json"
        if not path.exists():
            path.write_text(
                json.dumps(config_to_doc(config), indent=2, ensure_ascii=False) + "\n",
                encoding="utf-8",
            )
        index = self._config_index()
        history = index.setdefault(config.assessment_id, [])
        if h not in history:
            history.append(h)
            self._write_config_index(index)
        return h

    def load_config(self, hash_or_prefix: str) -> PromptConfig:
        cfg_dir = self.root / "configs"
        path = cfg_dir / f"{hash_or_prefix}.json"
        if not path.exists():
            matches = [
                p for p in cfg_dir.glob("*.json")
                if p.stem.startswith(hash_or_prefix) and p.name != "index.json"
            ]
            if len(matches) != 1:
                raise NotFound(f"no unique config {hash_or_prefix!r}")
            path = matches[0]
        return config_from_doc(json.loads(path.read_text(encoding="utf-8")))

    def config_history(self, assessment_id: str) -> list[str]:
        return list(self._config_index().get(assessment_id, []))

    def latest_config(self, assessment_id: str) -> PromptConfig:
        history = self.config_history(assessment_id)
        if not history:
            raise NotFound(f"no config for assessment {assessment_id!r}")
        return self.load_config(history[-1])

    def list_configs(self) -> dict[str, list[str]]:
        return self._config_index()

    # -- prompt assembly ------------------------------------------------------

    def assemble(self, config: PromptConfig, allow_unbalanced: bool = False) -> Prompt:
        assessment = self.assessment(config.assessment_id)
        rubric = self.rubric(config.rubric_id)
        store = self.exemplar_store(config.assessment_id)
        exemplars = {eid: store.get(eid) for eid in config.exemplar_ids}
        return assemble_prompt(
            config,
            assessment=assessment,
            rubric=rubric,
            exemplars=exemplars,
            linked=self.linked_context(assessment),
            allow_unbalanced=allow_unbalanced,
        )

    # -- providers ------------------------------------------------------------

    def provider_definitions(self) -> dict[str, dict[str, Any]]:
        path = self.root / "providers.yaml"
        if not path.exists():
            return {}
        return yaml.safe_load(path.read_text(encoding="utf-8")) or {}

    def build_provider(self, name: str, assessment_id: str) -> Provider:
        defn = self.provider_definitions().get(name)
        if defn is None:
            raise NotFound(f"no provider {name!r} in providers.yaml", provider=name)
        kind = defn.get("type")
        rubric = self.rubric_for(assessment_id)
        if kind == "echo":
            rs = self.responses(assessment_id)
            return EchoLabelsProvider(rubric, {r.id: r for r in rs.responses}, name=name)
        if kind == "faulty":
            rs = self.responses(assessment_id)
            return FaultyProvider(
                rubric,
                {r.id: r for r in rs.responses},
                error_rate=float(defn.get("error_rate", 0.0)),
                seed=int(defn.get("seed", 0)),
                overscore_criteria=tuple(defn.get("overscore") or ()),
                name=name,
            )
        if kind == "scripted":
            script_path = self.root / str(defn["script_file"])
            script = json.loads(script_path.read_text(encoding="utf-8"))
            return ScriptedProvider(
                script.get("completions") or {},
                script.get("finish_reasons") or {},
                name=name,
            )
        if kind == "http":
            return HttpProvider(
                ProviderConfig(
                    name=name,
                    endpoint=str(defn["endpoint"]),
                    model=str(defn.get("model", "")),
                    temperature=float(defn.get("temperature", 0.0)),
                    max_output_tokens=int(defn.get("max_output_tokens", 1024)),
                    max_attempts=int(defn.get("max_attempts", 3)),
                    backoff_s=float(defn.get("backoff_s", 0.5)),
                    auth_env=defn.get("auth_env"),
                    parallelism=defn.get("parallelism"),
                )
            )
        raise ScoreloopError(f"unknown provider type {kind!r}", provider=name)

    # -- runs ------------------------------------------------------------

    @property
    def runs(self) -> RunStore:
        return RunStore(self.root / "runs")

    def execute(
        self,
        config: PromptConfig,
        split_name: str,
        provider: Provider,
        run_id: str | None = None,
        parallelism: int | None = None,
        allow_unbalanced: bool = False,
    ) -> RunRecord:
        assessment = self.assessment(config.assessment_id)
        rubric = self.rubric(config.rubric_id)
        store = self.exemplar_store(config.assessment_id)
        exemplars = {eid: store.get(eid) for eid in config.exemplar_ids}
        responses = self.split_responses(config.assessment_id, split_name)
        self.save_config(config)
        return execute_run(
            config,
            responses,
            provider,
            self.runs,
            assessment=assessment,
            rubric=rubric,
            exemplars=exemplars,
            linked=self.linked_context(assessment),
            run_id=run_id,
            split_name=split_name,
            parallelism=parallelism,
            allow_unbalanced=allow_unbalanced,
        )

    def load_run(self, run_id: str) -> RunRecord:
        manifest = self.runs.read_manifest(run_id)
        rubric = self.rubric_for(manifest["assessment"])
        return self.runs.load_run(run_id, rubric)

    def run_metrics(self, run_id: str) -> RunMetrics:
        run = self.load_run(run_id)
        return run_metrics(run, self.rubric_for(run.assessment_id))

    def run_trends(self, run_id: str, threshold: float = 2.0) -> hitl.TrendReport:
        run = self.load_run(run_id)
        return hitl.detect_trends(run, self.rubric_for(run.assessment_id), threshold)

    def run_candidates(self, run_id: str, **weights: float) -> hitl.CandidateRanking:
        run = self.load_run(run_id)
        return hitl.rank_candidates(run, self.rubric_for(run.assessment_id), **weights)

    # -- IRR sessions ------------------------------------------------------------

    def irr_path(self, session_id: str) -> Path:
        return self.root / "irr" / f"{session_id}.json"

    def save_session(self, session: hitl.IrrSession) -> None:
        """Persist a session; consensus commits its sampled ids to the
        withheld set, mechanizing the leakage rule."""
        self.irr_path(session.session_id).write_text(
            json.dumps(hitl.session_to_doc(session), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        if session.status == hitl.STATUS_CONSENSUS and session.assessment_id:
            self.add_withheld(session.assessment_id, session.sampled_ids())

    def load_session(self, session_id: str) -> hitl.IrrSession:
        path = self.irr_path(session_id)
        if not path.exists():
            raise NotFound(f"no IRR session {session_id!r}", session=session_id)
        doc = json.loads(path.read_text(encoding="utf-8"))
        rubric = self.rubric(doc["rubric"]) if doc.get("rubric") else None
        if rubric is None:
            rubric = self.rubric_for(doc["assessment"])
        return hitl.session_from_doc(doc, rubric)

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "irr").glob("*.json"))

    def open_session(
        self,
        assessment_id: str,
        fraction: float = 0.2,
        seed: int = 0,
        raters: tuple[str, str] = ("rater_a", "rater_b"),
        session_id: str | None = None,
    ) -> hitl.IrrSession:
        rs = self.responses(assessment_id)
        if session_id is None:
            session_id = f"irr-{assessment_id}-{len(self.list_sessions()) + 1}"
        session = hitl.open_irr_session(
            rs, fraction=fraction, seed=seed, raters=raters, session_id=session_id
        )
        session.rubric_id = self.assessment(assessment_id).rubric_id
        self.save_session(session)
        return session

    # -- sticking points ------------------------------------------------------------

    def save_sticking_point(self, point: hitl.StickingPoint) -> None:
        path = self.root / "sticking_points" / f"{point.id}.json"
        path.write_text(
            json.dumps(
                {
                    "id": point.id,
                    "description": point.description,
                    "affected_criteria": list(point.affected_criteria),
                    "resolution": point.resolution,
                    "spawned_guideline": point.spawned_guideline,
                    "spawned_exemplar": point.spawned_exemplar,
                },
                indent=2,
                ensure_ascii=False,
            )
            + "\n",
            encoding="utf-8",
        )

    def load_sticking_points(self) -> list[dict[str, Any]]:
        return [
            json.loads(p.read_text(encoding="utf-8"))
            for p in sorted((self.root / "sticking_points").glob("*.json"))
        ]

    # -- promotions ------------------------------------------------------------

    def _promotions_path(self) -> Path:
        return self.root / "promotions.json"

    def promotions(self) -> dict[str, str]:
        path = self._promotions_path()
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def promote(
        self,
        run_id: str,
        response_id: str,
        chains: Mapping[str, CotChain],
        exemplar_id: str | None = None,
    ) -> hitl.Promotion:
        """Single-instance exemplar promotion; persists the new config and
        the quota registry only when every check passes."""
        run = self.load_run(run_id)
        assessment = self.assessment(run.assessment_id)
        rubric = self.rubric(assessment.rubric_id)
        config = self.load_config(run.config_hash)
        response = self.responses(run.assessment_id).get(response_id)
        promotions = dict(self.promotions())
        promotion = hitl.promote_exemplar(
            run,
            response,
            chains,
            rubric=rubric,
            assessment=assessment,
            config=config,
            store=self.exemplar_store(run.assessment_id),
            promotions=promotions,
            linked=self.linked_context(assessment),
            exemplar_id=exemplar_id,
        )
        self.save_config(promotion.config)
        self._promotions_path().write_text(
            json.dumps(promotions, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return promotion
