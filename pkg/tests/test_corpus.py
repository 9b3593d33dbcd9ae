import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from scoreloop.corpus import (
    CotChain,
    Exemplar,
    ExemplarStore,
    SplitSpec,
    StudentResponse,
    check_balance,
    ingest_responses,
    round_half_up,
    split_dataset,
    validate_exemplar,
)
from scoreloop.errors import (
    CitationNotFound,
    ExemplarConflict,
    FractionOutOfRange,
    ScoreloopError,
    WithheldIdUnknown,
)
from scoreloop.rubric import Assessment, make_score_vector, validate_rubric


@pytest.fixture
def rubric():
    return validate_rubric(
        {
            "id": "demo",
            "title": "Demo",
            "scheme": {
                "kind": "multi_label_binary",
                "criteria": [
                    {"id": cid, "description": f"crit {cid}", "domains": ["SCI"]}
                    for cid in ("C1", "C2")
                ],
            },
        }
    )


@pytest.fixture
def ordinal_rubric():
    return validate_rubric(
        {
            "id": "ord",
            "title": "Ordinal",
            "scheme": {
                "kind": "multi_class_ordinal",
                "min": 0,
                "max": 4,
                "levels": {str(v): f"level {v}" for v in range(5)},
            },
        }
    )


@pytest.fixture
def assessment():
    return Assessment(
        id="demo",
        background="",
        question="Explain.",
        gold_response="Because.",
        rubric_id="demo",
    )


# ---------------------------------------------------------------------------
# ingestion


def write_jsonl(path, rows):
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def test_ingest_158_rows(tmp_path, rubric, assessment):
    rows = [
        {"id": f"s{i:03d}", "assessment_id": "demo", "parts": {"Answer": f"text {i}"}}
        for i in range(158)
    ]
    path = tmp_path / "rows.jsonl"
    write_jsonl(path, rows)
    rs = ingest_responses(path, "jsonl", assessment, rubric)
    assert len(rs) == 158
    assert rs.errors == ()


def test_ingest_empty_file(tmp_path, rubric, assessment):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    rs = ingest_responses(path, "jsonl", assessment, rubric)
    assert len(rs) == 0
    assert rs.errors == ()


def test_ingest_row_with_no_parts_errors(tmp_path, rubric, assessment):
    path = tmp_path / "rows.jsonl"
    write_jsonl(
        path,
        [
            {"id": "a", "parts": {"Answer": "fine"}},
            {"id": "b", "parts": {"Answer": "  "}},
        ],
    )
    rs = ingest_responses(path, "jsonl", assessment, rubric)
    assert len(rs) == 1
    assert rs.errors[0].row == 2
    assert rs.errors[0].code == "ParseError"


def test_ingest_duplicate_and_unknown_assessment(tmp_path, rubric, assessment):
    path = tmp_path / "rows.jsonl"
    write_jsonl(
        path,
        [
            {"id": "a", "parts": {"Answer": "x"}},
            {"id": "a", "parts": {"Answer": "y"}},
            {"id": "b", "assessment_id": "other", "parts": {"Answer": "z"}},
        ],
    )
    rs = ingest_responses(path, "jsonl", assessment, rubric)
    assert rs.ids() == ("a",)
    assert [e.code for e in rs.errors] == ["DuplicateId", "UnknownAssessment"]


def test_ingest_human_scores(tmp_path, rubric, assessment):
    path = tmp_path / "rows.jsonl"
    write_jsonl(
        path,
        [{"id": "a", "parts": {"Answer": "x"}, "human_scores": {"C1": 1, "C2": 0}}],
    )
    rs = ingest_responses(path, "jsonl", assessment, rubric)
    assert rs.responses[0].human_scores.values == {"C1": 1, "C2": 0}


def test_ingest_csv_maps_columns(tmp_path, rubric, assessment):
    path = tmp_path / "rows.csv"
    path.write_text(
        "id,Answer,Explanation,C1,C2\n"
        "a,short answer,because,1,0\n"
        "b,another,so,0,1\n"
    )
    rs = ingest_responses(path, "csv", assessment, rubric)
    assert len(rs) == 2
    first = rs.responses[0]
    assert list(first.parts) == ["Answer", "Explanation"]
    assert first.human_scores.values == {"C1": 1, "C2": 0}


# ---------------------------------------------------------------------------
# splits


def ids(n):
    return [f"s{i:03d}" for i in range(n)]


@pytest.mark.parametrize(
    "n,expected_train,expected_test",
    [(158, 126, 32), (166, 133, 33), (161, 129, 32)],
)
def test_split_reproduces_documented_counts(n, expected_train, expected_test):
    train, test = split_dataset(ids(n), SplitSpec(test_fraction=0.2, seed=7))
    assert (len(train), len(test)) == (expected_train, expected_test)


def test_split_deterministic_and_order_free():
    spec = SplitSpec(test_fraction=0.2, seed=13)
    base = ids(50)
    shuffled = list(base)
    random.Random(99).shuffle(shuffled)
    assert split_dataset(base, spec) == split_dataset(shuffled, spec)
    assert split_dataset(base, spec) == split_dataset(base, spec)


def test_split_partition():
    train, test = split_dataset(ids(41), SplitSpec(test_fraction=0.3, seed=3))
    assert set(train) & set(test) == set()
    assert sorted(train + test) == ids(41)


def test_withheld_always_in_train():
    pool = ids(30)
    withheld = frozenset(pool[:10])
    spec = SplitSpec(test_fraction=0.2, seed=5, withheld_from_test=withheld)
    train, test = split_dataset(pool, spec)
    assert withheld <= set(train)
    assert len(test) == round_half_up(0.2 * 30)  # deficit refilled


def test_withheld_unknown_id():
    with pytest.raises(WithheldIdUnknown):
        split_dataset(ids(10), SplitSpec(0.2, 1, frozenset({"nope"})))


def test_fraction_out_of_range():
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(FractionOutOfRange):
            split_dataset(ids(10), SplitSpec(bad, 1))


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(2, 80),
    seed=st.integers(0, 2**30),
    fraction=st.floats(0.05, 0.95),
    data=st.data(),
)
def test_split_property(n, seed, fraction, data):
    pool = ids(n)
    withheld = frozenset(data.draw(st.sets(st.sampled_from(pool), max_size=n)))
    train, test = split_dataset(
        pool, SplitSpec(test_fraction=fraction, seed=seed, withheld_from_test=withheld)
    )
    assert sorted(train + test) == sorted(pool)
    assert not (set(train) & set(test))
    assert not (withheld & set(test))
    expected = min(round_half_up(fraction * n), n - len(withheld))
    assert len(test) == expected


# ---------------------------------------------------------------------------
# exemplars and balance


def exemplar(rubric, ex_id, labels, answer="the rain soaks in until the limit"):
    response = StudentResponse(
        id=f"resp-{ex_id}", assessment_id="demo", parts={"Answer": answer}
    )
    return Exemplar(
        id=ex_id,
        kind="ground_truth",
        response=response,
        labels=make_score_vector(rubric, labels),
        cot={
            cid: CotChain(
                citation=answer[:12],
                text=f"The student says '{answer[:12]}'. Score {v}.",
            )
            for cid, v in labels.items()
        },
    )


def test_balance_ok(rubric):
    exemplars = [
        exemplar(rubric, "e1", {"C1": 1, "C2": 1}),
        exemplar(rubric, "e2", {"C1": 0, "C2": 0}),
    ]
    report = check_balance(exemplars, rubric)
    assert report.ok
    assert report.counts["C1"] == {"positive": 1, "negative": 1}


def test_balance_empty_set_lists_all_violations(rubric):
    report = check_balance([], rubric)
    assert len(report.violations) == 4  # 2 criteria x (pos, neg)


def test_balance_ordinal_missing_level(ordinal_rubric):
    def ordinal_exemplar(ex_id, score):
        response = StudentResponse(
            id=f"r-{ex_id}", assessment_id="ord", parts={"Answer": "no, unfair test"}
        )
        return Exemplar(
            id=ex_id,
            kind="ground_truth",
            response=response,
            labels=make_score_vector(ordinal_rubric, score),
            cot={"score": CotChain(citation="unfair", text="says 'unfair'.")},
        )

    report = check_balance(
        [ordinal_exemplar(f"e{v}", v) for v in (0, 1, 3, 4)], ordinal_rubric
    )
    assert report.violations == ("score 2: no exemplar",)


def test_exemplar_citation_must_ground(rubric):
    ex = exemplar(rubric, "e1", {"C1": 1, "C2": 1})
    bad = Exemplar(
        id="bad",
        kind="ground_truth",
        response=ex.response,
        labels=ex.labels,
        cot={
            "C1": CotChain(citation="not in the response", text="chain"),
            "C2": CotChain(citation="the rain", text="chain"),
        },
    )
    with pytest.raises(CitationNotFound):
        validate_exemplar(bad, rubric)


def test_exemplar_chains_must_cover_all_criteria(rubric):
    ex = exemplar(rubric, "e1", {"C1": 1, "C2": 1})
    partial = Exemplar(
        id="partial",
        kind="ground_truth",
        response=ex.response,
        labels=ex.labels,
        cot={"C1": ex.cot["C1"]},
    )
    with pytest.raises(ScoreloopError):
        validate_exemplar(partial, rubric)


def test_exemplar_store_versions(tmp_path, rubric):
    store = ExemplarStore(tmp_path / "ex", rubric)
    e1 = exemplar(rubric, "e1", {"C1": 1, "C2": 1})
    e2 = exemplar(rubric, "e2", {"C1": 0, "C2": 0})
    store.add(e1)
    store.add(e2)
    assert store.active_ids() == ("e1", "e2")
    assert store.versions() == [["e1"], ["e1", "e2"]]
    assert store.get("e1").response.id == e1.response.id
    # same id, same content: no-op; different content: conflict
    store.put_document(e1)
    clashing = exemplar(rubric, "e1", {"C1": 0, "C2": 1})
    with pytest.raises(ExemplarConflict):
        store.put_document(clashing)
    assert store.versions() == [["e1"], ["e1", "e2"]]
