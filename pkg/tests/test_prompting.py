import dataclasses

import pytest
from hypothesis import given, strategies as st

from scoreloop.errors import (
    CitationNotFound,
    InvalidPromptConfig,
    MissingLinkedContext,
    NonMonotonicLineNumbers,
    ScoreloopError,
    TokenBudgetExceeded,
    UnknownExemplar,
)
from scoreloop.prompting import (
    BlockCodeListing,
    CANONICAL_ORDER,
    CodeLine,
    DEFAULT_COT_TEMPLATE,
    assemble_prompt,
    config_hash,
    encode_block_code,
    estimate_tokens,
    render_cot,
    render_instance,
)


# ---------------------------------------------------------------------------
# token estimation


def test_estimate_empty_is_zero():
    assert estimate_tokens("") == 0


def test_estimate_eight_chars_is_two():
    assert estimate_tokens("abcdefgh") == 2


def test_estimate_pluggable_tokenizer():
    assert estimate_tokens("a b c", tokenizer=lambda t: len(t.split())) == 3


@given(st.text(max_size=200), st.text(max_size=200))
def test_estimate_subadditive(a, b):
    assert estimate_tokens(a + b) <= estimate_tokens(a) + estimate_tokens(b) + 1


@given(st.text(max_size=300), st.text(max_size=50))
def test_estimate_monotone(a, suffix):
    assert estimate_tokens(a + suffix) >= estimate_tokens(a)


# ---------------------------------------------------------------------------
# reasoning chains


def test_render_cot_engineering_shape():
    response = "No. Morgan has different inches of rainfall, which means that it is not equal or fair."
    clause = "the student explains the runoff comparisons will not be fair"
    text = render_cot(DEFAULT_COT_TEMPLATE, "it is not equal or fair", clause, 4, response)
    assert text.startswith("The student says 'it is not equal or fair'.")
    assert clause in text
    assert text.endswith("the student earned a score of 4.")


def test_render_cot_rejects_foreign_citation():
    with pytest.raises(CitationNotFound):
        render_cot(DEFAULT_COT_TEMPLATE, "unfair and uneven", "clause", 4, "a response without it")


def test_render_cot_rejects_empty_clause():
    with pytest.raises(ScoreloopError):
        render_cot(DEFAULT_COT_TEMPLATE, "no", "  ", 1, "no")


# ---------------------------------------------------------------------------
# block code encoding


def test_encode_empty_listing_is_legend_only():
    out = encode_block_code(BlockCodeListing(lines=()))
    assert "Legend:" in out
    assert not out.splitlines()[0].startswith("\t")


def test_encode_single_line():
    listing = BlockCodeListing(
        lines=(CodeLine(line_number=2, indent_level=0, text="set [Rainfall (inch)] to [1]"),)
    )
    assert encode_block_code(listing).splitlines()[0] == "set [Rainfall (inch)] to [1]  # Line 2"


def test_encode_nested_indent():
    listing = BlockCodeListing(
        lines=(
            CodeLine(1, 0, "if [Rainfall (inch)] [<] [Absorption Limit (inch)]"),
            CodeLine(2, 1, "set [Runoff (inch)] to [0]"),
            CodeLine(3, 0, "set [Absorption (inch)] to [Rainfall (inch)]"),
        )
    )
    lines = encode_block_code(listing).splitlines()
    assert lines[1] == "\tset [Runoff (inch)] to [0]  # Line 2"
    assert not lines[2].startswith("\t")


def test_encode_color_legend():
    listing = BlockCodeListing(
        lines=(
            CodeLine(3, 0, "if [a]", color_tag="green"),
            CodeLine(7, 0, "if [b]", color_tag="green"),
            CodeLine(10, 0, "if [c]", color_tag="green"),
            CodeLine(12, 0, "set [d]", color_tag="green"),
        )
    )
    assert "Lines 3, 7, 10, and 12 are shown in green" in encode_block_code(listing)


def test_encode_rejects_non_monotonic_line_numbers():
    listing = BlockCodeListing(lines=(CodeLine(5, 0, "a"), CodeLine(5, 0, "b")))
    with pytest.raises(NonMonotonicLineNumbers):
        encode_block_code(listing)


def test_listing_rejects_indent_jump():
    listing = BlockCodeListing(lines=(CodeLine(1, 0, "a"), CodeLine(2, 2, "b")))
    with pytest.raises(ScoreloopError):
        encode_block_code(listing)


@st.composite
def listings(draw):
    n = draw(st.integers(0, 6))
    lines = []
    number = 0
    indent = 0
    for _ in range(n):
        number += draw(st.integers(1, 3))
        indent = max(0, indent + draw(st.sampled_from([-1, 0, 1])))
        lines.append(
            CodeLine(
                line_number=number,
                indent_level=indent,
                text=draw(st.sampled_from(["set [x] to [1]", "if [x] [<] [y]", "say [hi]"])),
                color_tag=draw(st.sampled_from([None, "green", "orange"])),
            )
        )
    return BlockCodeListing(lines=tuple(lines))


@given(listings(), listings())
def test_encode_injective(a, b):
    if a != b:
        assert encode_block_code(a) != encode_block_code(b)


# ---------------------------------------------------------------------------
# assembly over the shipped fixtures


def test_rules_sections_in_canonical_order(workspace):
    prompt = workspace.assemble(workspace.latest_config("rules"))
    assert prompt.section_kinds() == (
        "persona", "context_manager", "guidelines", "output_template", "few_shot",
    )
    spans = [span for _, span in prompt.sections]
    assert all(s < e for s, e in spans)
    assert all(prev_end <= start for (_, prev_end), (start, _) in zip(spans, spans[1:]))


def test_debugging_includes_meta_language_section(workspace):
    prompt = workspace.assemble(workspace.latest_config("debugging"))
    kinds = prompt.section_kinds()
    assert "meta_language" in kinds
    positions = [CANONICAL_ORDER.index(k) for k in kinds]
    assert positions == sorted(positions)
    assert "# Line 6" in prompt.section_text("meta_language")


def test_assembly_deterministic(workspace):
    config = workspace.latest_config("rules")
    texts = {workspace.assemble(config).full_text for _ in range(5)}
    assert len(texts) == 1
    assert workspace.assemble(config).config_hash == config_hash(config)


def test_guidelines_appear_once_in_order(workspace):
    rubric = workspace.rubric("rules")
    prompt = workspace.assemble(workspace.latest_config("rules"))
    section = prompt.section_text("guidelines")
    positions = []
    for guideline in rubric.guidelines:
        assert section.count(guideline) == 1
        positions.append(section.index(guideline))
    assert positions == sorted(positions)


def test_empty_exemplar_list_omits_few_shot(workspace):
    config = workspace.load_config(workspace.config_history("rules")[0])  # baseline
    assert config.exemplar_ids == ()
    prompt = workspace.assemble(config)
    assert "few_shot" not in prompt.section_kinds()
    assert {"persona", "context_manager", "output_template"} <= set(prompt.section_kinds())


def test_exemplar_chains_ground_in_their_responses(workspace):
    for aid in ("rules", "debugging", "engineering"):
        store = workspace.exemplar_store(aid)
        for ex_id in store.document_ids():
            ex = store.get(ex_id)  # load re-validates citation grounding
            for chain in ex.cot.values():
                assert any(chain.citation in part for part in ex.response.parts.values())


def test_unknown_exemplar(workspace):
    config = dataclasses.replace(
        workspace.latest_config("rules"), exemplar_ids=("rules-ex1", "ghost")
    )
    with pytest.raises(UnknownExemplar):
        workspace.assemble(config)


def test_missing_linked_context(workspace):
    config = workspace.latest_config("debugging")
    assessment = workspace.assessment("debugging")
    rubric = workspace.rubric("debugging")
    store = workspace.exemplar_store("debugging")
    exemplars = {eid: store.get(eid) for eid in config.exemplar_ids}
    with pytest.raises(MissingLinkedContext):
        assemble_prompt(config, assessment, rubric, exemplars, linked={})


def test_meta_language_requires_listing(workspace):
    config = dataclasses.replace(
        workspace.latest_config("rules"),
        block_order=("persona", "context_manager", "meta_language", "output_template"),
        exemplar_ids=(),
    )
    with pytest.raises(InvalidPromptConfig):
        workspace.assemble(config)


def test_block_order_validation(workspace):
    base = workspace.latest_config("rules")
    for bad in (
        ("context_manager", "persona", "output_template"),  # reordered
        ("persona", "context_manager"),  # missing output template
        ("persona", "persona", "context_manager", "output_template"),  # duplicate
    ):
        with pytest.raises(InvalidPromptConfig):
            workspace.assemble(dataclasses.replace(base, block_order=bad, exemplar_ids=()))


def test_token_budget_exceeded_reports_largest_sections(workspace):
    config = dataclasses.replace(workspace.latest_config("rules"), token_budget=100)
    with pytest.raises(TokenBudgetExceeded) as exc:
        workspace.assemble(config)
    detail = exc.value.detail
    assert detail["overshoot"] == detail["estimate"] - 100
    assert detail["largest_sections"][0][0] == "few_shot"


def test_unbalanced_exemplars_need_override(workspace):
    config = dataclasses.replace(
        workspace.latest_config("rules"), exemplar_ids=("rules-ex1",)
    )
    with pytest.raises(InvalidPromptConfig):
        workspace.assemble(config)
    assert workspace.assemble(config, allow_unbalanced=True).full_text


def test_config_hash_stability(workspace):
    config = workspace.latest_config("rules")
    clone = dataclasses.replace(config)
    assert config_hash(config) == config_hash(clone)
    assert config_hash(dataclasses.replace(config, token_budget=4096)) != config_hash(config)


def test_render_instance_carries_response_id(workspace):
    response = workspace.responses("rules").responses[0]
    text = render_instance(response)
    assert f"Response ID: {response.id}" in text
    for part in response.parts.values():
        assert part in text
