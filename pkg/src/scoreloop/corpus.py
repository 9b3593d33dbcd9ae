"""Student responses, dataset splits, and the few-shot exemplar store.

The split rule reproduces the documented counts exactly: the test size is
round-half-up(test_fraction * N) computed *before* withholding, withheld ids
always land in train, and the test deficit is refilled from the seeded
shuffle. Exemplar store mutations are append/replace-only with version
history so any historical prompt can be re-rendered byte-identically.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import (
    CitationNotFound,
    UnknownExemplar,
    DuplicateId,
    ExemplarConflict,
    FractionOutOfRange,
    ParseError,
    ScoreloopError,
    SchemeMismatch,
    UnknownAssessment,
    WithheldIdUnknown,
)
from .rubric import (
    Assessment,
    MultiClassOrdinal,
    MultiLabelBinary,
    ORDINAL_KEY,
    Rubric,
    ScoreVector,
    make_score_vector,
)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class StudentResponse:
    id: str
    assessment_id: str
    parts: dict[str, str]
    human_scores: ScoreVector | None = None

    def joined_text(self) -> str:
        return "\n".join(self.parts.values())


@dataclass(frozen=True)
class RowError:
    row: int
    code: str
    message: str


@dataclass(frozen=True)
class ResponseSet:
    assessment_id: str
    responses: tuple[StudentResponse, ...]
    errors: tuple[RowError, ...] = ()

    def __len__(self) -> int:
        return len(self.responses)

    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.responses)

    def get(self, response_id: str) -> StudentResponse:
        for r in self.responses:
            if r.id == response_id:
                return r
        raise ScoreloopError(f"no response {response_id!r}", response=response_id)


def response_to_doc(r: StudentResponse) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "id": r.id,
        "assessment_id": r.assessment_id,
        "parts": dict(r.parts),
    }
    if r.human_scores is not None:
        v = r.human_scores.values
        doc["human_scores"] = dict(v) if isinstance(v, dict) else {ORDINAL_KEY: v}
    return doc


def response_from_doc(doc: dict[str, Any], rubric: Rubric) -> StudentResponse:
    parts = {str(k): str(v) for k, v in (doc.get("parts") or {}).items()}
    if not any(p.strip() for p in parts.values()):
        raise ParseError("response has no nonempty part")
    human = None
    if doc.get("human_scores") is not None:
        human = make_score_vector(rubric, doc["human_scores"])
    return StudentResponse(
        id=str(doc["id"]),
        assessment_id=str(doc.get("assessment_id") or ""),
        parts=parts,
        human_scores=human,
    )


def ingest_responses(
    path: str | Path,
    format: str,
    assessment: Assessment,
    rubric: Rubric,
) -> ResponseSet:
    """Read a response file; every row becomes a response or a row error.

    JSONL rows are objects with ``id``, ``assessment_id``, ``parts`` and an
    optional ``human_scores``. CSV maps one column per response part; columns
    named after rubric criterion ids (or ``score`` for ordinal rubrics)
    become human labels.
    """
    path = Path(path)
    if format not in ("jsonl", "csv"):
        raise ScoreloopError(f"unknown ingest format {format!r}")
    rows: list[tuple[int, dict[str, Any]]] = []
    errors: list[RowError] = []

    if format == "jsonl":
        with path.open(encoding="utf-8") as fh:
            for n, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rows.append((n, json.loads(line)))
                except json.JSONDecodeError as exc:
                    errors.append(RowError(n, "ParseError", f"bad json: {exc}"))
    else:
        score_cols = set(rubric.criterion_ids())
        with path.open(encoding="utf-8", newline="") as fh:
            for n, rec in enumerate(csv.DictReader(fh), start=1):
                doc: dict[str, Any] = {"id": rec.get("id"), "parts": {}, "human_scores": None}
                labels: dict[str, Any] = {}
                for col, value in rec.items():
                    if col == "id" or value is None:
                        continue
                    if col == "assessment_id":
                        doc["assessment_id"] = value
                    elif col in score_cols:
                        labels[col] = value
                    else:
                        doc["parts"][col] = value
                if labels:
                    try:
                        doc["human_scores"] = {k: int(v) for k, v in labels.items()}
                    except ValueError:
                        errors.append(RowError(n, "ParseError", "non-integer score column"))
                        continue
                else:
                    doc.pop("human_scores")
                rows.append((n, doc))

    responses: list[StudentResponse] = []
    seen: set[str] = set()
    for n, doc in rows:
        rid = doc.get("id")
        if not rid:
            errors.append(RowError(n, "ParseError", "row has no id"))
            continue
        rid = str(rid)
        if rid in seen:
            errors.append(RowError(n, DuplicateId.__name__, f"duplicate id {rid!r}"))
            continue
        aid = str(doc.get("assessment_id") or assessment.id)
        if aid != assessment.id:
            errors.append(
                RowError(n, UnknownAssessment.__name__, f"row targets {aid!r}")
            )
            continue
        try:
            resp = response_from_doc({**doc, "assessment_id": aid}, rubric)
        except ScoreloopError as exc:
            errors.append(RowError(n, exc.code, exc.message))
            continue
        seen.add(rid)
        responses.append(resp)

    return ResponseSet(
        assessment_id=assessment.id,
        responses=tuple(responses),
        errors=tuple(errors),
    )


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    seed: int
    withheld_from_test: frozenset[str] = frozenset()


def split_dataset(
    ids: Sequence[str] | ResponseSet, spec: SplitSpec
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Deterministic (train, test) partition of the response ids.

    |test| = round_half_up(fraction * N) before withholding; withheld ids are
    forced into train and the deficit refilled from the seeded shuffle. A
    pure function of (ids, spec): input order never matters.
    """
    if isinstance(ids, ResponseSet):
        ids = ids.ids()
    id_list = list(ids)
    if len(id_list) < 2:
        raise ScoreloopError(f"cannot split {len(id_list)} responses")
    if not 0.0 < spec.test_fraction < 1.0:
        raise FractionOutOfRange(
            f"test fraction {spec.test_fraction} outside (0, 1)"
        )
    id_set = set(id_list)
    unknown = sorted(set(spec.withheld_from_test) - id_set)
    if unknown:
        raise WithheldIdUnknown(
            f"withheld ids not in the response set: {unknown}", ids=unknown
        )

    test_n = round_half_up(spec.test_fraction * len(id_list))
    eligible_cap = len(id_list) - len(set(spec.withheld_from_test))
    test_n = min(test_n, eligible_cap)

    order = sorted(id_set)
    random.Random(spec.seed).shuffle(order)

    test: list[str] = []
    train: list[str] = []
    for rid in order:
        if len(test) < test_n and rid not in spec.withheld_from_test:
            test.append(rid)
        else:
            train.append(rid)
    return tuple(train), tuple(test)


# ---------------------------------------------------------------------------
# exemplars


EXEMPLAR_KINDS = ("ground_truth", "sticking_point", "balance", "active_learning")


@dataclass(frozen=True)
class CotChain:
    """One reasoning chain: the verbatim citation it rests on plus full text."""

    citation: str
    text: str


@dataclass(frozen=True)
class Exemplar:
    id: str
    kind: str
    response: StudentResponse
    labels: ScoreVector
    cot: dict[str, CotChain]  # criterion id -> chain; ordinal uses the "score" key


def validate_exemplar(ex: Exemplar, rubric: Rubric) -> None:
    """Coverage, nonempty chains, and verbatim-citation grounding."""
    if ex.kind not in EXEMPLAR_KINDS:
        raise ScoreloopError(f"unknown exemplar kind {ex.kind!r}", exemplar=ex.id)
    if ex.labels.rubric_id != rubric.id:
        raise SchemeMismatch(
            f"exemplar {ex.id!r} labeled against {ex.labels.rubric_id!r}",
            exemplar=ex.id,
        )
    expected = set(rubric.criterion_ids())
    if set(ex.cot) != expected:
        raise ScoreloopError(
            f"exemplar {ex.id!r} chains must cover exactly {sorted(expected)}",
            exemplar=ex.id,
            got=sorted(ex.cot),
        )
    for cid, chain in ex.cot.items():
        if not chain.text.strip():
            raise ScoreloopError(
                f"exemplar {ex.id!r} has an empty chain for {cid}", exemplar=ex.id
            )
        if not chain.citation.strip():
            raise CitationNotFound(
                f"exemplar {ex.id!r} chain for {cid} has an empty citation",
                exemplar=ex.id,
                criterion=cid,
            )
        if not any(chain.citation in part for part in ex.response.parts.values()):
            raise CitationNotFound(
                f"chain for {cid} cites text not found in response {ex.response.id!r}",
                exemplar=ex.id,
                criterion=cid,
                citation=chain.citation,
            )


def exemplar_to_doc(ex: Exemplar) -> dict[str, Any]:
    return {
        "id": ex.id,
        "kind": ex.kind,
        "response": response_to_doc(ex.response),
        "labels": ex.labels.as_mapping()
        if isinstance(ex.labels.values, dict)
        else {ORDINAL_KEY: ex.labels.values},
        "cot": {
            cid: {"citation": ch.citation, "text": ch.text}
            for cid, ch in ex.cot.items()
        },
    }


def exemplar_from_doc(doc: dict[str, Any], rubric: Rubric) -> Exemplar:
    ex = Exemplar(
        id=str(doc["id"]),
        kind=str(doc["kind"]),
        response=response_from_doc(doc["response"], rubric),
        labels=make_score_vector(rubric, doc["labels"]),
        cot={
            str(cid): CotChain(citation=str(c["citation"]), text=str(c["text"]))
            for cid, c in (doc.get("cot") or {}).items()
        },
    )
    validate_exemplar(ex, rubric)
    return ex


@dataclass(frozen=True)
class BalanceReport:
    rubric_id: str
    counts: dict[str, dict[str, int]]  # criterion -> {positive, negative} or score -> {count}
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_balance(exemplars: Iterable[Exemplar], rubric: Rubric) -> BalanceReport:
    """Flag any criterion without a positive and a negative exemplar
    (multi-label), or any score value with zero exemplars (ordinal)."""
    exemplars = list(exemplars)
    for ex in exemplars:
        if ex.labels.rubric_id != rubric.id:
            raise SchemeMismatch(
                f"exemplar {ex.id!r} labeled against {ex.labels.rubric_id!r}"
            )
    violations: list[str] = []
    counts: dict[str, dict[str, int]] = {}
    scheme = rubric.scheme
    if isinstance(scheme, MultiLabelBinary):
        for crit in scheme.criteria:
            pos = sum(1 for ex in exemplars if ex.labels.values[crit.id] == 1)
            neg = sum(1 for ex in exemplars if ex.labels.values[crit.id] == 0)
            counts[crit.id] = {"positive": pos, "negative": neg}
            if pos == 0:
                violations.append(f"{crit.id}: no positive exemplar")
            if neg == 0:
                violations.append(f"{crit.id}: no negative exemplar")
    else:
        assert isinstance(scheme, MultiClassOrdinal)
        for level in scheme.levels:
            n = sum(1 for ex in exemplars if ex.labels.values == level)
            counts[str(level)] = {"count": n}
            if n == 0:
                violations.append(f"score {level}: no exemplar")
    return BalanceReport(
        rubric_id=rubric.id, counts=counts, violations=tuple(violations)
    )


class ExemplarStore:
    """Versioned directory of exemplar documents plus a manifest.

    Documents are immutable once written (same-id re-adds must be
    byte-identical). Each mutation appends a full active-id list to the
    manifest's version history; nothing is ever deleted.
    """

    def __init__(self, root: str | Path, rubric: Rubric):
        self.root = Path(root)
        self.rubric = rubric
        self.root.mkdir(parents=True, exist_ok=True)

    @property
    def _manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def _read_manifest(self) -> dict[str, Any]:
        if not self._manifest_path.exists():
            return {"versions": []}
        return json.loads(self._manifest_path.read_text(encoding="utf-8"))

    def _write_manifest(self, manifest: dict[str, Any]) -> None:
        self._manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def versions(self) -> list[list[str]]:
        return [list(v) for v in self._read_manifest()["versions"]]

    def active_ids(self) -> tuple[str, ...]:
        versions = self._read_manifest()["versions"]
        return tuple(versions[-1]) if versions else ()

    def document_ids(self) -> tuple[str, ...]:
        return tuple(sorted(p.stem for p in self.root.glob("*.json") if p.name != "manifest.json"))

    def get(self, exemplar_id: str) -> Exemplar:
        path = self.root / f"{exemplar_id}.json"
        if not path.exists():
            raise UnknownExemplar(
                f"no exemplar document {exemplar_id!r}", exemplar=exemplar_id
            )
        return exemplar_from_doc(
            json.loads(path.read_text(encoding="utf-8")), self.rubric
        )

    def get_many(self, ids: Iterable[str]) -> list[Exemplar]:
        return [self.get(i) for i in ids]

    def active(self) -> list[Exemplar]:
        return self.get_many(self.active_ids())

    def put_document(self, ex: Exemplar) -> None:
        """Write an exemplar document without touching the active set."""
        validate_exemplar(ex, self.rubric)
        path = self.root / f"{ex.id}.json"
        payload = json.dumps(exemplar_to_doc(ex), indent=2, sort_keys=True) + "\n"
        if path.exists():
            if path.read_text(encoding="utf-8") != payload:
                raise ExemplarConflict(
                    f"exemplar {ex.id!r} already exists with different content",
                    exemplar=ex.id,
                )
            return
        path.write_text(payload, encoding="utf-8")

    def append_version(self, ids: Sequence[str]) -> int:
        known = set(self.document_ids())
        missing = [i for i in ids if i not in known]
        if missing:
            raise ScoreloopError(f"version references unknown exemplars {missing}")
        manifest = self._read_manifest()
        manifest["versions"].append(list(ids))
        self._write_manifest(manifest)
        return len(manifest["versions"]) - 1

    def add(self, ex: Exemplar) -> int:
        """Write the document and activate it at the end of a new version."""
        self.put_document(ex)
        return self.append_version([*self.active_ids(), ex.id])
