"""Rubrics, criteria, assessments, and score vectors.

Two scoring schemes exist: multi-label binary (independent one-point
criteria such as R1..R9) and multi-class ordinal (a single level, e.g.
0..4, with one description per level). All scheme semantics live here;
everything downstream treats these as opaque validated values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Union

from .errors import (
    BadRange,
    DuplicateCriterionId,
    EmptyScheme,
    InvalidScoreVector,
    MissingLevelDescription,
    RubricValidationError,
    SchemeMismatch,
    ScoreloopError,
)

if TYPE_CHECKING:  # avoids a cycle; listings are defined with the prompt machinery
    from .prompting import BlockCodeListing

DOMAINS = ("SCI", "COM", "ENG")


@dataclass(frozen=True)
class Criterion:
    id: str
    description: str
    domains: tuple[str, ...]
    points: int = 1


@dataclass(frozen=True)
class MultiLabelBinary:
    criteria: tuple[Criterion, ...]

    @property
    def criterion_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.criteria)


@dataclass(frozen=True)
class MultiClassOrdinal:
    min: int
    max: int
    level_descriptions: dict[int, str] = field(default_factory=dict)

    @property
    def levels(self) -> range:
        return range(self.min, self.max + 1)


Scheme = Union[MultiLabelBinary, MultiClassOrdinal]

# Ordinal results are keyed by this pseudo-criterion id in structured output.
ORDINAL_KEY = "score"


@dataclass(frozen=True)
class Rubric:
    id: str
    title: str
    scheme: Scheme
    guidelines: tuple[str, ...] = ()

    @property
    def is_ordinal(self) -> bool:
        return isinstance(self.scheme, MultiClassOrdinal)

    def criterion_ids(self) -> tuple[str, ...]:
        """Expected ids in structured output: criterion ids, or the ordinal key."""
        if isinstance(self.scheme, MultiLabelBinary):
            return self.scheme.criterion_ids
        return (ORDINAL_KEY,)

    def score_range(self, criterion_id: str) -> tuple[int, int]:
        if isinstance(self.scheme, MultiLabelBinary):
            return (0, 1)
        return (self.scheme.min, self.scheme.max)


@dataclass(frozen=True)
class ScoreVector:
    """Human or consensus labels for one response against one rubric.

    ``values`` is a criterion_id -> {0,1} map for multi-label rubrics and a
    single integer for ordinal rubrics. Construct through
    :func:`make_score_vector` so the exhaustive key check always runs.
    """

    rubric_id: str
    values: Union[dict[str, int], int]

    def as_mapping(self) -> dict[str, int]:
        if isinstance(self.values, dict):
            return dict(self.values)
        return {ORDINAL_KEY: self.values}


def make_score_vector(rubric: Rubric, values: Union[dict[str, Any], int]) -> ScoreVector:
    """Validate ``values`` against the rubric and freeze them into a vector.

    Rejects any key not in the rubric and any missing key; ordinal values
    must sit inside [min, max].
    """
    scheme = rubric.scheme
    if isinstance(scheme, MultiLabelBinary):
        if not isinstance(values, dict):
            raise SchemeMismatch(
                f"rubric {rubric.id!r} is multi-label; expected a criterion map",
                rubric=rubric.id,
            )
        if ORDINAL_KEY in values and ORDINAL_KEY not in scheme.criterion_ids:
            raise SchemeMismatch(
                f"ordinal-style value offered to multi-label rubric {rubric.id!r}",
                rubric=rubric.id,
            )
        expected = set(scheme.criterion_ids)
        got = set(values)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise InvalidScoreVector(
                f"score vector keys do not match rubric {rubric.id!r}",
                missing=missing,
                extra=extra,
            )
        clean: dict[str, int] = {}
        for cid in scheme.criterion_ids:  # rubric order, not caller order
            v = values[cid]
            if v not in (0, 1):
                raise InvalidScoreVector(
                    f"criterion {cid!r} must be 0 or 1, got {v!r}", criterion=cid
                )
            clean[cid] = int(v)
        return ScoreVector(rubric_id=rubric.id, values=clean)

    if isinstance(values, dict):
        if set(values) == {ORDINAL_KEY}:
            values = values[ORDINAL_KEY]
        else:
            raise SchemeMismatch(
                f"rubric {rubric.id!r} is ordinal; expected a single score",
                rubric=rubric.id,
            )
    if not isinstance(values, int) or isinstance(values, bool):
        raise InvalidScoreVector(f"ordinal score must be an integer, got {values!r}")
    if not scheme.min <= values <= scheme.max:
        raise InvalidScoreVector(
            f"ordinal score {values} outside [{scheme.min}, {scheme.max}]",
            value=values,
        )
    return ScoreVector(rubric_id=rubric.id, values=int(values))


@dataclass(frozen=True)
class Assessment:
    id: str
    background: str
    question: str
    gold_response: str
    rubric_id: str
    code_listing: "BlockCodeListing | None" = None
    linked_context: tuple[str, ...] = ()


def total_score(rubric: Rubric, sv: ScoreVector) -> int:
    """Multi-label: sum of criterion values weighted by points. Ordinal: the value."""
    if sv.rubric_id != rubric.id:
        raise SchemeMismatch(
            f"score vector for {sv.rubric_id!r} applied to rubric {rubric.id!r}"
        )
    scheme = rubric.scheme
    if isinstance(scheme, MultiLabelBinary):
        if not isinstance(sv.values, dict):
            raise SchemeMismatch("multi-label rubric requires a criterion map")
        return sum(c.points * sv.values[c.id] for c in scheme.criteria)
    if isinstance(sv.values, dict):
        raise SchemeMismatch("ordinal rubric requires a single score")
    return sv.values


def max_score(rubric: Rubric) -> int:
    scheme = rubric.scheme
    if isinstance(scheme, MultiLabelBinary):
        return sum(c.points for c in scheme.criteria)
    return scheme.max


# ---------------------------------------------------------------------------
# document (de)serialization


def validate_rubric(raw: dict[str, Any]) -> Rubric:
    """Build a Rubric from an untyped document, or raise with every violation.

    Never partially accepts: any violation raises :class:`RubricValidationError`
    carrying the full list.
    """
    violations: list[ScoreloopError] = []
    rubric_id = str(raw.get("id") or "")
    title = str(raw.get("title") or rubric_id)
    if not rubric_id:
        violations.append(EmptyScheme("rubric document is missing 'id'"))

    guidelines = tuple(str(g) for g in raw.get("guidelines") or ())
    for i, g in enumerate(guidelines):
        if not g.strip():
            violations.append(EmptyScheme(f"guideline {i + 1} is empty"))

    scheme_doc = raw.get("scheme") or {}
    kind = scheme_doc.get("kind")
    scheme: Scheme | None = None

    if kind == "multi_label_binary":
        items = scheme_doc.get("criteria") or []
        if not items:
            violations.append(EmptyScheme("multi-label rubric has no criteria"))
        seen: set[str] = set()
        criteria: list[Criterion] = []
        for item in items:
            cid = str(item.get("id") or "")
            if not cid:
                violations.append(EmptyScheme("criterion with empty id"))
                continue
            if cid in seen:
                violations.append(
                    DuplicateCriterionId(f"criterion id {cid!r} appears twice", criterion=cid)
                )
                continue
            seen.add(cid)
            domains = tuple(str(d) for d in item.get("domains") or ())
            if not domains:
                violations.append(
                    EmptyScheme(f"criterion {cid!r} has no domain tags", criterion=cid)
                )
            for d in domains:
                if d not in DOMAINS:
                    violations.append(
                        EmptyScheme(f"criterion {cid!r} has unknown domain {d!r}", criterion=cid)
                    )
            points = item.get("points", 1)
            if not isinstance(points, int) or points < 1:
                violations.append(
                    BadRange(f"criterion {cid!r} points must be >= 1", criterion=cid)
                )
                points = 1
            criteria.append(
                Criterion(
                    id=cid,
                    description=str(item.get("description") or ""),
                    domains=domains,
                    points=points,
                )
            )
        scheme = MultiLabelBinary(criteria=tuple(criteria))
    elif kind == "multi_class_ordinal":
        lo = scheme_doc.get("min")
        hi = scheme_doc.get("max")
        if not isinstance(lo, int) or not isinstance(hi, int) or lo >= hi:
            violations.append(BadRange(f"ordinal range [{lo!r}, {hi!r}] requires min < max"))
            lo, hi = 0, 1
        levels_doc = scheme_doc.get("levels") or {}
        levels: dict[int, str] = {}
        for k, v in levels_doc.items():
            try:
                levels[int(k)] = str(v)
            except (TypeError, ValueError):
                violations.append(BadRange(f"level key {k!r} is not an integer"))
        for level in range(lo, hi + 1):
            if level not in levels:
                violations.append(
                    MissingLevelDescription(f"no description for score {level}", level=level)
                )
            elif not levels[level].strip():
                violations.append(
                    MissingLevelDescription(f"empty description for score {level}", level=level)
                )
        for level in sorted(levels):
            if not lo <= level <= hi:
                violations.append(
                    BadRange(f"level {level} outside [{lo}, {hi}]", level=level)
                )
        scheme = MultiClassOrdinal(min=lo, max=hi, level_descriptions=levels)
    else:
        violations.append(EmptyScheme(f"unknown scheme kind {kind!r}"))

    if violations:
        raise RubricValidationError(violations)
    assert scheme is not None
    return Rubric(id=rubric_id, title=title, scheme=scheme, guidelines=guidelines)


def rubric_to_doc(rubric: Rubric) -> dict[str, Any]:
    doc: dict[str, Any] = {"id": rubric.id, "title": rubric.title}
    scheme = rubric.scheme
    if isinstance(scheme, MultiLabelBinary):
        doc["scheme"] = {
            "kind": "multi_label_binary",
            "criteria": [
                {
                    "id": c.id,
                    "description": c.description,
                    "domains": list(c.domains),
                    "points": c.points,
                }
                for c in scheme.criteria
            ],
        }
    else:
        doc["scheme"] = {
            "kind": "multi_class_ordinal",
            "min": scheme.min,
            "max": scheme.max,
            "levels": {str(k): scheme.level_descriptions[k] for k in sorted(scheme.level_descriptions)},
        }
    doc["guidelines"] = list(rubric.guidelines)
    return doc


def assessment_from_doc(raw: dict[str, Any]) -> Assessment:
    from .prompting import listing_from_doc  # deferred: avoids import cycle

    aid = str(raw.get("id") or "")
    question = str(raw.get("question") or "")
    gold = str(raw.get("gold_response") or "")
    rubric_id = str(raw.get("rubric") or raw.get("rubric_id") or "")
    if not aid or not question or not gold or not rubric_id:
        raise ScoreloopError(
            f"assessment document {aid!r} needs id, question, gold_response, rubric"
        )
    listing = None
    if raw.get("code_listing"):
        listing = listing_from_doc(raw["code_listing"])
    return Assessment(
        id=aid,
        background=str(raw.get("background") or ""),
        question=question,
        gold_response=gold,
        rubric_id=rubric_id,
        code_listing=listing,
        linked_context=tuple(str(x) for x in raw.get("linked_context") or ()),
    )


def assessment_to_doc(a: Assessment) -> dict[str, Any]:
    from .prompting import listing_to_doc

    doc: dict[str, Any] = {
        "id": a.id,
        "background": a.background,
        "question": a.question,
        "gold_response": a.gold_response,
        "rubric": a.rubric_id,
    }
    if a.linked_context:
        doc["linked_context"] = list(a.linked_context)
    if a.code_listing is not None:
        doc["code_listing"] = listing_to_doc(a.code_listing)
    return doc
