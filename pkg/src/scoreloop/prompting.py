"""Deterministic prompt assembly.

A prompt is rendered from ordered pattern blocks: persona, context
(background, question, gold response, rubric, linked assessments), an
optional text encoding of block-based code, numbered guidelines, the
structured-output schema, and few-shot exemplars with their reasoning
chains. Rendering is a pure function of the config and referenced
documents; identical configs produce byte-identical prompts with a stable
content hash.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from .corpus import CotChain, Exemplar, StudentResponse, check_balance
from .errors import (
    CitationNotFound,
    InvalidPromptConfig,
    MissingLinkedContext,
    NonMonotonicLineNumbers,
    ScoreloopError,
    TokenBudgetExceeded,
    UnknownExemplar,
)
from .rubric import Assessment, MultiClassOrdinal, MultiLabelBinary, ORDINAL_KEY, Rubric

PERSONA = "persona"
CONTEXT_MANAGER = "context_manager"
META_LANGUAGE = "meta_language"
GUIDELINES = "guidelines"
OUTPUT_TEMPLATE = "output_template"
FEW_SHOT = "few_shot"

# One fixed order for every task; configs may omit optional blocks but
# never reorder them.
CANONICAL_ORDER = (
    PERSONA,
    CONTEXT_MANAGER,
    META_LANGUAGE,
    GUIDELINES,
    OUTPUT_TEMPLATE,
    FEW_SHOT,
)
REQUIRED_BLOCKS = (PERSONA, CONTEXT_MANAGER, OUTPUT_TEMPLATE)

DEFAULT_TOKEN_BUDGET = 8192

DEFAULT_COT_TEMPLATE = (
    "The student says '{citation}'. The rubric states '{clause}'. "
    "Based on the rubric, the student earned a score of {score}."
)


def estimate_tokens(text: str, tokenizer: Callable[[str], int] | None = None) -> int:
    """Monotone token estimate; ceil(len/4) unless an exact tokenizer is given."""
    if tokenizer is not None:
        return tokenizer(text)
    return math.ceil(len(text) / 4)


def render_cot(
    template: str,
    citation: str,
    rubric_clause: str,
    score: int,
    response_text: str,
) -> str:
    """Fill the reasoning-chain template, refusing ungrounded citations."""
    if not rubric_clause.strip():
        raise ScoreloopError("rubric clause is empty")
    if not citation.strip():
        raise CitationNotFound("citation is empty")
    if citation not in response_text:
        raise CitationNotFound(
            f"citation {citation!r} is not a verbatim substring of the response",
            citation=citation,
        )
    return template.format(citation=citation, clause=rubric_clause, score=score)


# ---------------------------------------------------------------------------
# block-based code listings


@dataclass(frozen=True)
class CodeLine:
    line_number: int
    indent_level: int
    text: str
    color_tag: str | None = None


@dataclass(frozen=True)
class BlockCodeListing:
    lines: tuple[CodeLine, ...]


def validate_listing(listing: BlockCodeListing) -> None:
    prev_number: int | None = None
    prev_indent: int | None = None
    for line in listing.lines:
        if line.indent_level < 0:
            raise ScoreloopError(f"line {line.line_number} has negative indent")
        if prev_number is not None and line.line_number <= prev_number:
            raise NonMonotonicLineNumbers(
                f"line number {line.line_number} follows {prev_number}"
            )
        if prev_indent is not None and abs(line.indent_level - prev_indent) > 1:
            raise ScoreloopError(
                f"indent jumps by more than 1 at line {line.line_number}"
            )
        prev_number = line.line_number
        prev_indent = line.indent_level


def listing_from_doc(doc: dict[str, Any]) -> BlockCodeListing:
    lines = tuple(
        CodeLine(
            line_number=int(item["line"]),
            indent_level=int(item.get("indent", 0)),
            text=str(item["text"]),
            color_tag=item.get("color"),
        )
        for item in doc.get("lines") or ()
    )
    listing = BlockCodeListing(lines=lines)
    validate_listing(listing)
    return listing


def listing_to_doc(listing: BlockCodeListing) -> dict[str, Any]:
    return {
        "lines": [
            {
                "line": ln.line_number,
                "indent": ln.indent_level,
                "text": ln.text,
                **({"color": ln.color_tag} if ln.color_tag else {}),
            }
            for ln in listing.lines
        ]
    }


def _english_list(items: Sequence[str]) -> str:
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


def encode_block_code(listing: BlockCodeListing) -> str:
    """Render block code as tab-indented text with line-number comments.

    Variable tokens stay in square brackets. A legend paragraph follows the
    code explaining the notation, any block colors, and the mapping from
    numbered rules to 'if' statements.
    """
    validate_listing(listing)
    body_lines = [
        "\t" * ln.indent_level + ln.text + f"  # Line {ln.line_number}"
        for ln in listing.lines
    ]
    colors: dict[str, list[int]] = {}
    for ln in listing.lines:
        if ln.color_tag:
            colors.setdefault(ln.color_tag, []).append(ln.line_number)

    legend = [
        "Legend: the code above is the text form of a block-based model.",
        "Indentation (tab characters) marks nesting, one level per tab, as in Python.",
        "Tokens in square brackets are variables or constant values.",
        "The comment at the end of each line gives that line's number in the block"
        " environment; students often identify blocks by line number.",
    ]
    for color in sorted(colors):
        numbers = colors[color]
        if len(numbers) == 1:
            legend.append(
                f"Line {numbers[0]} is shown in {color} in the block environment;"
                " students may identify blocks by color."
            )
        else:
            legend.append(
                f"Lines {_english_list([str(n) for n in numbers])} are shown in"
                f" {color} in the block environment; students may identify blocks"
                " by color."
            )
    legend.append(
        "Each 'if' statement corresponds, in order, to one numbered rule from the"
        " rules assessment, so 'rule 2' and 'the second if statement' name the"
        " same block."
    )
    legend_text = " ".join(legend)
    if body_lines:
        return "\n".join(body_lines) + "\n\n" + legend_text
    return legend_text


# ---------------------------------------------------------------------------
# prompt config


@dataclass(frozen=True)
class PromptConfig:
    assessment_id: str
    rubric_id: str
    block_order: tuple[str, ...]
    exemplar_ids: tuple[str, ...] = ()
    cot_template: str = DEFAULT_COT_TEMPLATE
    output_schema: dict[str, Any] = field(default_factory=dict)
    token_budget: int = DEFAULT_TOKEN_BUDGET
    persona_text: str = ""
    context_extras: tuple[str, ...] = ()
    # Snapshot of the rubric guidelines at config creation; None means
    # "render the rubric's live guidelines". Snapshots keep historical
    # prompts re-renderable byte-identically after guidelines grow.
    guidelines: tuple[str, ...] | None = None


def validate_config(config: PromptConfig) -> None:
    seen: set[str] = set()
    for kind in config.block_order:
        if kind not in CANONICAL_ORDER:
            raise InvalidPromptConfig(f"unknown block kind {kind!r}")
        if kind in seen:
            raise InvalidPromptConfig(f"duplicate block kind {kind!r}")
        seen.add(kind)
    positions = [CANONICAL_ORDER.index(k) for k in config.block_order]
    if positions != sorted(positions):
        raise InvalidPromptConfig(
            f"block order {list(config.block_order)} deviates from the canonical order"
        )
    for kind in REQUIRED_BLOCKS:
        if kind not in config.block_order:
            raise InvalidPromptConfig(f"block order must include {kind!r}")
    if config.token_budget <= 0:
        raise InvalidPromptConfig("token budget must be positive")
    if not config.output_schema:
        raise InvalidPromptConfig("config has no output schema")


def config_to_doc(config: PromptConfig) -> dict[str, Any]:
    return {
        "assessment": config.assessment_id,
        "rubric": config.rubric_id,
        "block_order": list(config.block_order),
        "exemplars": list(config.exemplar_ids),
        "cot_template": config.cot_template,
        "output_schema": config.output_schema,
        "token_budget": config.token_budget,
        "persona_text": config.persona_text,
        "context_extras": list(config.context_extras),
        "guidelines": list(config.guidelines) if config.guidelines is not None else None,
    }


def config_from_doc(doc: dict[str, Any]) -> PromptConfig:
    config = PromptConfig(
        assessment_id=str(doc["assessment"]),
        rubric_id=str(doc["rubric"]),
        block_order=tuple(doc["block_order"]),
        exemplar_ids=tuple(doc.get("exemplars") or ()),
        cot_template=str(doc.get("cot_template") or DEFAULT_COT_TEMPLATE),
        output_schema=doc.get("output_schema") or {},
        token_budget=int(doc.get("token_budget") or DEFAULT_TOKEN_BUDGET),
        persona_text=str(doc.get("persona_text") or ""),
        context_extras=tuple(doc.get("context_extras") or ()),
        guidelines=tuple(doc["guidelines"]) if doc.get("guidelines") is not None else None,
    )
    validate_config(config)
    return config


def config_hash(config: PromptConfig) -> str:
    canonical = json.dumps(
        config_to_doc(config), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# rendering


@dataclass(frozen=True)
class Prompt:
    full_text: str
    sections: tuple[tuple[str, tuple[int, int]], ...]  # (kind, (start, end))
    estimated_tokens: int
    config_hash: str

    def section_kinds(self) -> tuple[str, ...]:
        return tuple(kind for kind, _ in self.sections)

    def section_text(self, kind: str) -> str:
        for k, (start, end) in self.sections:
            if k == kind:
                return self.full_text[start:end]
        raise KeyError(kind)


def render_rubric_text(rubric: Rubric) -> str:
    lines = [f"Rubric: {rubric.title}"]
    scheme = rubric.scheme
    if isinstance(scheme, MultiLabelBinary):
        for c in scheme.criteria:
            pts = "1 point" if c.points == 1 else f"{c.points} points"
            lines.append(f"{c.id} ({pts}): {c.description}")
    else:
        assert isinstance(scheme, MultiClassOrdinal)
        for level in sorted(scheme.levels, reverse=True):
            lines.append(f"Score {level}: {scheme.level_descriptions[level]}")
    return "\n".join(lines)


def render_response_parts(response: StudentResponse) -> str:
    return "\n".join(f"{label}: {text}" for label, text in response.parts.items())


def _render_exemplar(index: int, total: int, ex: Exemplar, rubric: Rubric) -> str:
    lines = [f"Example {index} of {total}", render_response_parts(ex.response)]
    if isinstance(rubric.scheme, MultiLabelBinary):
        lines.append("Reasoning:")
        for crit in rubric.scheme.criteria:
            lines.append(f"- {crit.id}: {ex.cot[crit.id].text}")
        labels = ex.labels.values
        assert isinstance(labels, dict)
        scored = ", ".join(f"{c.id}={labels[c.id]}" for c in rubric.scheme.criteria)
        total_pts = sum(c.points * labels[c.id] for c in rubric.scheme.criteria)
        lines.append(f"Scores: {scored}")
        lines.append(f"Total: {total_pts}")
    else:
        lines.append(f"Reasoning: {ex.cot[ORDINAL_KEY].text}")
        lines.append(f"Score: {ex.labels.values}")
    return "\n".join(lines)


def assemble_prompt(
    config: PromptConfig,
    assessment: Assessment,
    rubric: Rubric,
    exemplars: Mapping[str, Exemplar],
    linked: Mapping[str, tuple[Assessment, Rubric]] | None = None,
    tokenizer: Callable[[str], int] | None = None,
    allow_unbalanced: bool = False,
) -> Prompt:
    """Render the prompt for one scoring task.

    Sections appear in the canonical order. The estimate must fit the
    config's token budget; on overshoot the error reports how far over and
    which sections are largest, since trimming few-shot content is the usual
    remedy.
    """
    validate_config(config)
    linked = linked or {}

    resolved: list[Exemplar] = []
    for ex_id in config.exemplar_ids:
        if ex_id not in exemplars:
            raise UnknownExemplar(f"exemplar {ex_id!r} not found", exemplar=ex_id)
        resolved.append(exemplars[ex_id])
    if resolved and not allow_unbalanced:
        report = check_balance(resolved, rubric)
        if not report.ok:
            raise InvalidPromptConfig(
                "few-shot exemplars fail the balance rule; pass allow_unbalanced"
                " to override",
                violations=list(report.violations),
            )

    if META_LANGUAGE in config.block_order and assessment.code_listing is None:
        raise InvalidPromptConfig(
            f"config orders a {META_LANGUAGE} block but assessment"
            f" {assessment.id!r} has no code listing"
        )

    guidelines = (
        config.guidelines if config.guidelines is not None else rubric.guidelines
    )

    sections: list[tuple[str, str]] = []
    for kind in config.block_order:
        if kind == PERSONA:
            sections.append((kind, config.persona_text.strip()))
        elif kind == CONTEXT_MANAGER:
            chunks = ["## Context"]
            if assessment.background.strip():
                chunks.append("Background:\n" + assessment.background.strip())
            chunks.append("Question:\n" + assessment.question.strip())
            chunks.append(
                "Correct response (gold label):\n" + assessment.gold_response.strip()
            )
            chunks.append(render_rubric_text(rubric))
            for extra in config.context_extras:
                chunks.append(extra.strip())
            for linked_id in assessment.linked_context:
                if linked_id not in linked:
                    raise MissingLinkedContext(
                        f"assessment {assessment.id!r} links {linked_id!r}, which"
                        " was not provided",
                        linked=linked_id,
                    )
                la, lr = linked[linked_id]
                chunks.append(
                    f"Related assessment ({la.id}) the students completed earlier:\n"
                    + la.question.strip()
                    + "\nCorrect response to the related assessment:\n"
                    + la.gold_response.strip()
                    + "\n"
                    + render_rubric_text(lr)
                )
            sections.append((kind, "\n\n".join(chunks)))
        elif kind == META_LANGUAGE:
            assert assessment.code_listing is not None
            sections.append(
                (kind, "## Model code\n\n" + encode_block_code(assessment.code_listing))
            )
        elif kind == GUIDELINES:
            numbered = "\n".join(f"{i}. {g}" for i, g in enumerate(guidelines, start=1))
            sections.append((kind, "## Guidelines\n\n" + numbered))
        elif kind == OUTPUT_TEMPLATE:
            schema_text = json.dumps(config.output_schema, indent=2, ensure_ascii=False)
            sections.append(
                (
                    kind,
                    "## Output format\n\nRespond with a single JSON document"
                    " conforming to this schema:\n" + schema_text,
                )
            )
        elif kind == FEW_SHOT:
            if not resolved:
                continue  # an empty exemplar list simply omits the section
            rendered = [
                _render_exemplar(i, len(resolved), ex, rubric)
                for i, ex in enumerate(resolved, start=1)
            ]
            sections.append((kind, "## Worked examples\n\n" + "\n\n".join(rendered)))

    separator = "\n\n"
    spans: list[tuple[str, tuple[int, int]]] = []
    cursor = 0
    pieces: list[str] = []
    for i, (kind, text) in enumerate(sections):
        if i:
            pieces.append(separator)
            cursor += len(separator)
        spans.append((kind, (cursor, cursor + len(text))))
        pieces.append(text)
        cursor += len(text)
    full_text = "".join(pieces)

    est = estimate_tokens(full_text, tokenizer)
    if est > config.token_budget:
        largest = sorted(
            (
                (kind, estimate_tokens(full_text[s:e], tokenizer))
                for kind, (s, e) in spans
            ),
            key=lambda item: -item[1],
        )
        raise TokenBudgetExceeded(
            f"prompt estimate {est} exceeds budget {config.token_budget}"
            f" by {est - config.token_budget} tokens",
            estimate=est,
            budget=config.token_budget,
            overshoot=est - config.token_budget,
            largest_sections=largest[:3],
        )

    return Prompt(
        full_text=full_text,
        sections=tuple(spans),
        estimated_tokens=est,
        config_hash=config_hash(config),
    )


def render_instance(response: StudentResponse) -> str:
    """The per-response request appended after the assembled prompt."""
    return (
        "Now score the following student response.\n"
        f"Response ID: {response.id}\n\n"
        + render_response_parts(response)
        + "\n\nRespond with only the JSON document."
    )
