"""Provider-agnostic completion interface plus structured-output parsing.

Real traffic goes through :class:`HttpProvider`, which speaks the common
chat-completion wire format against any configured endpoint. Offline work
uses the mock providers:

* ``EchoLabelsProvider`` reproduces the stored human labels with templated
  reasoning, so a labeled split scores with perfect agreement end to end;
* ``ScriptedProvider`` returns fixture completions keyed by response id;
* ``FaultyProvider`` is the adversarial mock: seeded corruption
  (malformed / truncated / out-of-range) at a configured rate, plus an
  optional systematic-overscore script. The overscore script flips a
  designated criterion's 0 label to 1 *unless* the prompt's few-shot
  section contains a corrective chain for that criterion (a line starting
  with ``- <id>:`` whose text assigns a score of 0). Promoting such an
  exemplar therefore corrects the mock, mirroring how a demonstration
  corrects a real model.

Corruption decisions are independent per response id (seeded by
``"{seed}:{response_id}"``), so they are reproducible under any degree of
scoring parallelism.
"""

from __future__ import annotations

import json
import logging
import os
import random
import re
import time
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol

import httpx
import jsonschema

from .corpus import StudentResponse
from .errors import (
    AuthMissing,
    ExhaustedRetries,
    ExtraCriterion,
    MalformedDocument,
    MissingCriterion,
    RateLimited,
    ScoreOutOfRange,
    Transport,
    Truncated,
)
from .rubric import ORDINAL_KEY, Rubric

logger = logging.getLogger("scoreloop.gateway")

RESPONSE_ID_PATTERN = re.compile(r"^Response ID: (\S+)$", re.M)

# Structural shape of every scoring completion; per-task fixture schemas
# embed this same shape in the rendered prompt.
OUTPUT_DOCUMENT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["criteria", "total_score"],
    "properties": {
        "criteria": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "reasoning", "score"],
                "properties": {
                    "id": {"type": "string"},
                    "reasoning": {"type": "string"},
                    "score": {"type": "integer"},
                },
            },
        },
        "total_score": {"type": "integer"},
    },
}


@dataclass(frozen=True)
class ProviderConfig:
    name: str
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 1024
    max_attempts: int = 3
    backoff_s: float = 0.5
    auth_env: str | None = None
    parallelism: int | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class RawCompletion:
    text: str
    finish_reason: str  # stop | length | error
    usage: dict[str, int] = field(default_factory=dict)
    latency_s: float = 0.0
    attempts: int = 1
    backoffs: tuple[float, ...] = ()


@dataclass(frozen=True)
class LLMResult:
    """Parsed scores and reasoning for one response, as the model stated them.

    ``reported_total`` is never recomputed here; comparing it against the
    subscore sum is the runner's discrepancy check.
    """

    scores: dict[str, int]
    reasoning: dict[str, str]
    reported_total: int
    raw: RawCompletion | None = None


class Provider(Protocol):
    config: ProviderConfig

    def attempt(self, prompt_text: str) -> RawCompletion: ...


def complete(provider: Provider, prompt_text: str, run_id: str | None = None) -> RawCompletion:
    """One completion with the provider's retry policy.

    Rate limits and transport failures are retried with exponential backoff
    up to ``max_attempts``; each attempt is logged with the run id. The
    returned completion records how many attempts and backoffs it took.
    """
    cfg = provider.config
    backoffs: list[float] = []
    last_error: Exception | None = None
    for attempt in range(1, cfg.max_attempts + 1):
        started = time.monotonic()
        try:
            completion = provider.attempt(prompt_text)
        except (RateLimited, Transport) as exc:
            last_error = exc
            logger.info(
                "run=%s provider=%s attempt=%d/%d failed: %s",
                run_id, cfg.name, attempt, cfg.max_attempts, exc.code,
            )
            if attempt < cfg.max_attempts:
                delay = cfg.backoff_s * (2 ** (attempt - 1))
                backoffs.append(delay)
                time.sleep(delay)
            continue
        logger.info(
            "run=%s provider=%s attempt=%d finish=%s",
            run_id, cfg.name, attempt, completion.finish_reason,
        )
        latency = completion.latency_s or (time.monotonic() - started)
        return RawCompletion(
            text=completion.text,
            finish_reason=completion.finish_reason,
            usage=completion.usage,
            latency_s=latency,
            attempts=attempt,
            backoffs=tuple(backoffs),
        )
    raise ExhaustedRetries(
        f"provider {cfg.name!r} failed after {cfg.max_attempts} attempts:"
        f" {last_error}",
        attempts=cfg.max_attempts,
    )


# ---------------------------------------------------------------------------
# parsing


def _first_conforming_object(text: str) -> dict[str, Any] | None:
    decoder = json.JSONDecoder()
    for pos, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        try:
            jsonschema.validate(obj, OUTPUT_DOCUMENT_SCHEMA)
        except jsonschema.ValidationError:
            continue
        return obj
    return None


def parse_output(raw: RawCompletion, rubric: Rubric) -> LLMResult:
    """Extract the first schema-conforming object, tolerating surrounding prose.

    Validates criterion coverage and score ranges against the rubric and
    requires a stated total. Truncated generations never parse.
    """
    if raw.finish_reason == "length":
        raise Truncated("generation was cut off at the output token limit")
    if raw.finish_reason == "error":
        raise MalformedDocument("provider reported a failed generation")
    obj = _first_conforming_object(raw.text)
    if obj is None:
        raise MalformedDocument("no schema-conforming JSON object in the completion")

    entries: dict[str, dict[str, Any]] = {}
    for item in obj["criteria"]:
        cid = item["id"]
        if cid in entries:
            raise MalformedDocument(f"criterion {cid!r} appears twice")
        entries[cid] = item

    expected = rubric.criterion_ids()
    for cid in expected:
        if cid not in entries:
            raise MissingCriterion(f"output lacks criterion {cid!r}", criterion=cid)
    for cid in entries:
        if cid not in expected:
            raise ExtraCriterion(f"output names unknown criterion {cid!r}", criterion=cid)

    scores: dict[str, int] = {}
    reasoning: dict[str, str] = {}
    for cid in expected:
        item = entries[cid]
        lo, hi = rubric.score_range(cid)
        value = item["score"]
        if not lo <= value <= hi:
            raise ScoreOutOfRange(
                f"criterion {cid!r} score {value} outside [{lo}, {hi}]",
                criterion=cid,
                value=value,
            )
        if not str(item["reasoning"]).strip():
            raise MalformedDocument(f"criterion {cid!r} has empty reasoning")
        scores[cid] = int(value)
        reasoning[cid] = str(item["reasoning"])

    return LLMResult(
        scores=scores,
        reasoning=reasoning,
        reported_total=int(obj["total_score"]),
        raw=raw,
    )


def result_to_document(result: LLMResult, rubric: Rubric) -> str:
    """Serialize a result back into the output wire document.

    ``parse_output`` of this text reproduces the result exactly.
    """
    doc = {
        "criteria": [
            {"id": cid, "reasoning": result.reasoning[cid], "score": result.scores[cid]}
            for cid in rubric.criterion_ids()
        ],
        "total_score": result.reported_total,
    }
    return json.dumps(doc, indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# providers


def _extract_response_id(prompt_text: str) -> str:
    match = RESPONSE_ID_PATTERN.search(prompt_text)
    if match is None:
        raise Transport("prompt carries no 'Response ID:' marker for the mock")
    return match.group(1)


def _echo_document(rubric: Rubric, labels: Mapping[str, int]) -> str:
    criteria = []
    for cid in rubric.criterion_ids():
        value = labels[cid]
        criteria.append(
            {
                "id": cid,
                "reasoning": (
                    f"Reviewed against {cid}; consistent with the recorded label,"
                    f" the student earned a score of {value}."
                ),
                "score": value,
            }
        )
    total = sum(item["score"] for item in criteria) if not rubric.is_ordinal else criteria[0]["score"]
    return json.dumps({"criteria": criteria, "total_score": total})


class EchoLabelsProvider:
    """Emits schema-valid output reproducing each response's human labels."""

    def __init__(
        self,
        rubric: Rubric,
        responses: Mapping[str, StudentResponse],
        name: str = "echo",
    ):
        self.config = ProviderConfig(name=name)
        self.rubric = rubric
        self.responses = dict(responses)

    def attempt(self, prompt_text: str) -> RawCompletion:
        rid = _extract_response_id(prompt_text)
        response = self.responses.get(rid)
        if response is None or response.human_scores is None:
            raise Transport(f"no labeled response {rid!r} for the echo mock")
        labels = response.human_scores.as_mapping()
        return RawCompletion(
            text=_echo_document(self.rubric, labels),
            finish_reason="stop",
            usage={"prompt_chars": len(prompt_text)},
        )


class ScriptedProvider:
    """Returns fixture completions keyed by response id, verbatim."""

    def __init__(
        self,
        script: Mapping[str, str],
        finish_reasons: Mapping[str, str] | None = None,
        name: str = "scripted",
    ):
        self.config = ProviderConfig(name=name)
        self.script = dict(script)
        self.finish_reasons = dict(finish_reasons or {})

    def attempt(self, prompt_text: str) -> RawCompletion:
        rid = _extract_response_id(prompt_text)
        if rid not in self.script:
            raise Transport(f"no scripted completion for response {rid!r}")
        return RawCompletion(
            text=self.script[rid],
            finish_reason=self.finish_reasons.get(rid, "stop"),
        )


CORRUPTION_KINDS = ("malformed", "truncated", "out_of_range")


def corruption_for(seed: int, response_id: str, rate: float) -> str | None:
    """The seeded per-response corruption decision, shared with tests."""
    rng = random.Random(f"{seed}:{response_id}")
    if rng.random() >= rate:
        return None
    return rng.choice(CORRUPTION_KINDS)


class FaultyProvider:
    """Echo provider with seeded corruption and a systematic-overscore script."""

    def __init__(
        self,
        rubric: Rubric,
        responses: Mapping[str, StudentResponse],
        error_rate: float = 0.0,
        seed: int = 0,
        overscore_criteria: tuple[str, ...] = (),
        name: str = "faulty",
    ):
        if overscore_criteria and rubric.is_ordinal:
            raise ValueError("overscore scripting targets multi-label criteria")
        self.config = ProviderConfig(name=name)
        self.rubric = rubric
        self.responses = dict(responses)
        self.error_rate = error_rate
        self.seed = seed
        self.overscore_criteria = tuple(overscore_criteria)

    def _has_corrective_chain(self, prompt_text: str, criterion_id: str) -> bool:
        pattern = re.compile(
            rf"^- {re.escape(criterion_id)}: .*score of 0\b", re.M
        )
        return pattern.search(prompt_text) is not None

    def attempt(self, prompt_text: str) -> RawCompletion:
        rid = _extract_response_id(prompt_text)
        response = self.responses.get(rid)
        if response is None or response.human_scores is None:
            raise Transport(f"no labeled response {rid!r} for the faulty mock")
        labels = dict(response.human_scores.as_mapping())

        for cid in self.overscore_criteria:
            if labels.get(cid) == 0 and not self._has_corrective_chain(prompt_text, cid):
                labels[cid] = 1

        text = _echo_document(self.rubric, labels)
        corruption = corruption_for(self.seed, rid, self.error_rate)
        if corruption == "malformed":
            return RawCompletion(
                text="The response was reviewed but no structured scores are"
                " available for it.",
                finish_reason="stop",
            )
        if corruption == "truncated":
            return RawCompletion(text=text[: max(len(text) // 2, 1)], finish_reason="length")
        if corruption == "out_of_range":
            doc = json.loads(text)
            doc["criteria"][0]["score"] = self.rubric.score_range(
                doc["criteria"][0]["id"]
            )[1] + 1
            return RawCompletion(text=json.dumps(doc), finish_reason="stop")
        return RawCompletion(text=text, finish_reason="stop")


class HttpProvider:
    """Chat-completion client for any configured HTTP endpoint.

    Credentials come from the environment variable named in the config;
    model identity is configuration, not code.
    """

    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(transport=transport, timeout=60.0)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_env:
            token = os.environ.get(self.config.auth_env, "")
            if not token:
                raise AuthMissing(
                    f"environment variable {self.config.auth_env!r} is not set"
                )
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def attempt(self, prompt_text: str) -> RawCompletion:
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        }
        started = time.monotonic()
        try:
            resp = self._client.post(
                self.config.endpoint, json=body, headers=self._headers()
            )
        except httpx.HTTPError as exc:
            raise Transport(f"request failed: {exc}") from exc
        latency = time.monotonic() - started
        if resp.status_code == 429:
            raise RateLimited("endpoint returned 429")
        if resp.status_code != 200:
            raise Transport(f"endpoint returned {resp.status_code}")
        payload = resp.json()
        try:
            choice = payload["choices"][0]
            text = choice["message"]["content"]
            finish = choice.get("finish_reason", "stop")
        except (KeyError, IndexError, TypeError) as exc:
            raise Transport(f"unexpected response shape: {exc}") from exc
        return RawCompletion(
            text=text,
            finish_reason=finish,
            usage={k: int(v) for k, v in (payload.get("usage") or {}).items()},
            latency_s=latency,
        )
