import json

import httpx
import pytest

from scoreloop.corpus import StudentResponse
from scoreloop.errors import (
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
from scoreloop.gateway import (
    EchoLabelsProvider,
    FaultyProvider,
    HttpProvider,
    LLMResult,
    ProviderConfig,
    RawCompletion,
    ScriptedProvider,
    complete,
    corruption_for,
    parse_output,
    result_to_document,
)
from scoreloop.rubric import make_score_vector, validate_rubric


@pytest.fixture
def rules_rubric(workspace):
    return workspace.rubric("rules")


def rules_document(scores, total=None, reasoning="The student addressed this."):
    criteria = [
        {"id": cid, "reasoning": reasoning, "score": v} for cid, v in scores.items()
    ]
    if total is None:
        total = sum(scores.values())
    return json.dumps({"criteria": criteria, "total_score": total})


def full_scores(value=1):
    return {f"R{i}": value for i in range(1, 10)}


# ---------------------------------------------------------------------------
# parsing


def test_parse_well_formed_with_surrounding_prose(rules_rubric):
    body = rules_document({**full_scores(1), "R7": 0}, total=7)
    text = f"Here is my evaluation.\n```json\n{body}\n```\nHope that helps!"
    result = parse_output(RawCompletion(text=text, finish_reason="stop"), rules_rubric)
    assert result.scores["R7"] == 0
    assert result.reported_total == 7


def test_parse_skips_non_conforming_objects(rules_rubric):
    text = '{"note": "warm-up"} ' + rules_document(full_scores(1))
    result = parse_output(RawCompletion(text=text, finish_reason="stop"), rules_rubric)
    assert result.reported_total == 9


def test_parse_missing_criterion(rules_rubric):
    scores = full_scores(1)
    del scores["R7"]
    raw = RawCompletion(text=rules_document(scores), finish_reason="stop")
    with pytest.raises(MissingCriterion) as exc:
        parse_output(raw, rules_rubric)
    assert exc.value.detail["criterion"] == "R7"


def test_parse_extra_criterion(rules_rubric):
    raw = RawCompletion(
        text=rules_document({**full_scores(1), "R10": 1}), finish_reason="stop"
    )
    with pytest.raises(ExtraCriterion):
        parse_output(raw, rules_rubric)


def test_parse_score_out_of_range(rules_rubric):
    raw = RawCompletion(text=rules_document({**full_scores(1), "R2": 3}), finish_reason="stop")
    with pytest.raises(ScoreOutOfRange):
        parse_output(raw, rules_rubric)


def test_parse_truncated(rules_rubric):
    cut = rules_document(full_scores(1))[:80]
    with pytest.raises(Truncated):
        parse_output(RawCompletion(text=cut, finish_reason="length"), rules_rubric)


def test_parse_malformed(rules_rubric):
    raw = RawCompletion(text="I could not produce scores.", finish_reason="stop")
    with pytest.raises(MalformedDocument):
        parse_output(raw, rules_rubric)


def test_parse_empty_reasoning_rejected(rules_rubric):
    raw = RawCompletion(
        text=rules_document(full_scores(1), reasoning="  "), finish_reason="stop"
    )
    with pytest.raises(MalformedDocument):
        parse_output(raw, rules_rubric)


def test_parse_serialize_roundtrip(rules_rubric):
    result = LLMResult(
        scores={**full_scores(1), "R4": 0},
        reasoning={cid: f"reasoning for {cid}" for cid in full_scores()},
        reported_total=8,
    )
    text = result_to_document(result, rules_rubric)
    again = parse_output(RawCompletion(text=text, finish_reason="stop"), rules_rubric)
    assert again.scores == result.scores
    assert again.reasoning == result.reasoning
    assert again.reported_total == result.reported_total


def test_parse_ordinal_output(workspace):
    rubric = workspace.rubric("engineering")
    doc = json.dumps(
        {"criteria": [{"id": "score", "reasoning": "says no, cites rain", "score": 3}],
         "total_score": 3}
    )
    result = parse_output(RawCompletion(text=doc, finish_reason="stop"), rubric)
    assert result.scores == {"score": 3}


# ---------------------------------------------------------------------------
# mock providers


def labeled_response(rubric, rid, labels):
    return StudentResponse(
        id=rid,
        assessment_id=rubric.id,
        parts={"Answer": "some words"},
        human_scores=make_score_vector(rubric, labels),
    )


def test_echo_labels_reproduces_human_labels(rules_rubric):
    labels = {**full_scores(1), "R3": 0, "R9": 0}
    provider = EchoLabelsProvider(
        rules_rubric, {"s1": labeled_response(rules_rubric, "s1", labels)}
    )
    raw = complete(provider, "prompt body\nResponse ID: s1\nAnswer: some words")
    result = parse_output(raw, rules_rubric)
    assert result.scores == labels
    assert result.reported_total == 7


def test_scripted_returns_fixture_verbatim(rules_rubric):
    provider = ScriptedProvider({"s9": "VERBATIM FIXTURE"})
    raw = complete(provider, "Response ID: s9")
    assert raw.text == "VERBATIM FIXTURE"
    with pytest.raises(ExhaustedRetries):
        complete(provider, "Response ID: unknown")


def test_retry_after_two_rate_limits():
    class Flaky:
        def __init__(self):
            self.config = ProviderConfig(name="flaky", max_attempts=4, backoff_s=0.001)
            self.calls = 0

        def attempt(self, prompt_text):
            self.calls += 1
            if self.calls <= 2:
                raise RateLimited("429")
            return RawCompletion(text="ok", finish_reason="stop")

    provider = Flaky()
    raw = complete(provider, "Response ID: x")
    assert provider.calls == 3
    assert raw.attempts == 3
    assert len(raw.backoffs) == 2


def test_retries_exhausted():
    class Down:
        config = ProviderConfig(name="down", max_attempts=2, backoff_s=0.001)

        def attempt(self, prompt_text):
            raise Transport("boom")

    with pytest.raises(ExhaustedRetries):
        complete(Down(), "Response ID: x")


def test_faulty_corruption_is_seeded_and_parallel_safe(rules_rubric):
    responses = {
        f"s{i}": labeled_response(rules_rubric, f"s{i}", full_scores(1)) for i in range(80)
    }
    provider = FaultyProvider(rules_rubric, responses, error_rate=0.25, seed=42)
    corrupted = set()
    for rid in responses:
        raw = provider.attempt(f"Response ID: {rid}")
        try:
            parse_output(raw, rules_rubric)
        except Exception:
            corrupted.add(rid)
    expected = {rid for rid in responses if corruption_for(42, rid, 0.25) is not None}
    assert corrupted == expected
    # binomial sanity: the seeded count sits inside a wide 99% band for p=.25
    assert 8 <= len(corrupted) <= 33


def test_faulty_overscore_honors_corrective_chain(rules_rubric):
    labels = {**full_scores(1), "R2": 0, "R5": 0}
    provider = FaultyProvider(
        rules_rubric,
        {"s1": labeled_response(rules_rubric, "s1", labels)},
        overscore_criteria=("R2", "R5"),
    )
    plain = parse_output(provider.attempt("Response ID: s1"), rules_rubric)
    assert plain.scores["R2"] == 1 and plain.scores["R5"] == 1  # flipped up

    corrected_prompt = (
        "## Worked examples\n"
        "- R2: The student says 'all is absorbed'. Based on the rubric, the "
        "student earned a score of 0.\n"
        "Response ID: s1"
    )
    fixed = parse_output(provider.attempt(corrected_prompt), rules_rubric)
    assert fixed.scores["R2"] == 0  # corrective chain honored
    assert fixed.scores["R5"] == 1  # still skewed, no chain for R5


# ---------------------------------------------------------------------------
# HTTP provider


def chat_payload(content, finish="stop"):
    return {
        "choices": [{"message": {"content": content}, "finish_reason": finish}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 5},
    }


def test_http_provider_happy_path():
    def handler(request):
        body = json.loads(request.content)
        assert body["temperature"] == 0.0
        return httpx.Response(200, json=chat_payload("scored"))

    provider = HttpProvider(
        ProviderConfig(name="http", endpoint="http://llm.test/v1/chat"),
        transport=httpx.MockTransport(handler),
    )
    raw = complete(provider, "Response ID: x")
    assert raw.text == "scored"
    assert raw.usage["prompt_tokens"] == 10


def test_http_provider_retries_on_429():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] <= 2:
            return httpx.Response(429)
        return httpx.Response(200, json=chat_payload("finally"))

    provider = HttpProvider(
        ProviderConfig(name="http", endpoint="http://llm.test/v1/chat", backoff_s=0.001),
        transport=httpx.MockTransport(handler),
    )
    raw = complete(provider, "x")
    assert raw.text == "finally"
    assert raw.attempts == 3


def test_http_provider_auth_missing(monkeypatch):
    monkeypatch.delenv("MISSING_KEY", raising=False)
    provider = HttpProvider(
        ProviderConfig(name="http", endpoint="http://llm.test/v1", auth_env="MISSING_KEY"),
        transport=httpx.MockTransport(lambda request: httpx.Response(200)),
    )
    with pytest.raises(AuthMissing):
        provider.attempt("x")


def test_temperature_validation():
    with pytest.raises(ValueError):
        ProviderConfig(name="bad", temperature=-0.5)
    with pytest.raises(ValueError):
        ProviderConfig(name="bad", max_attempts=0)
