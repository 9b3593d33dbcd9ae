import pytest
from hypothesis import given, strategies as st

from scoreloop.errors import (
    InvalidScoreVector,
    RubricValidationError,
    SchemeMismatch,
)
from scoreloop.rubric import (
    MultiClassOrdinal,
    MultiLabelBinary,
    make_score_vector,
    max_score,
    rubric_to_doc,
    total_score,
    validate_rubric,
)


def binary_rubric_doc(ids=("R1", "R2", "R3")):
    return {
        "id": "demo",
        "title": "Demo",
        "scheme": {
            "kind": "multi_label_binary",
            "criteria": [
                {"id": cid, "description": f"crit {cid}", "domains": ["SCI"], "points": 1}
                for cid in ids
            ],
        },
        "guidelines": ["Cite the student."],
    }


def ordinal_rubric_doc(lo=0, hi=4, drop=()):
    levels = {str(v): f"level {v}" for v in range(lo, hi + 1) if v not in drop}
    return {
        "id": "ord",
        "title": "Ordinal",
        "scheme": {"kind": "multi_class_ordinal", "min": lo, "max": hi, "levels": levels},
        "guidelines": [],
    }


def test_valid_binary_rubric_roundtrip():
    rubric = validate_rubric(binary_rubric_doc())
    assert rubric.criterion_ids() == ("R1", "R2", "R3")
    # validate(serialize(validate(doc))) is stable
    again = validate_rubric(rubric_to_doc(rubric))
    assert again == rubric
    assert rubric_to_doc(again) == rubric_to_doc(rubric)


def test_nine_criterion_rubric_has_max_nine():
    rubric = validate_rubric(binary_rubric_doc([f"R{i}" for i in range(1, 10)]))
    assert max_score(rubric) == 9
    assert len(rubric.scheme.criteria) == 9


def test_duplicate_criterion_id_rejected():
    doc = binary_rubric_doc(("R1", "R1"))
    with pytest.raises(RubricValidationError) as exc:
        validate_rubric(doc)
    assert any(v.code == "DuplicateCriterionId" for v in exc.value.violations)


def test_missing_level_description():
    with pytest.raises(RubricValidationError) as exc:
        validate_rubric(ordinal_rubric_doc(drop={2}))
    codes = [v.code for v in exc.value.violations]
    assert codes == ["MissingLevelDescription"]
    assert exc.value.violations[0].detail["level"] == 2


def test_bad_ordinal_range():
    with pytest.raises(RubricValidationError) as exc:
        validate_rubric(ordinal_rubric_doc(lo=4, hi=4))
    assert any(v.code == "BadRange" for v in exc.value.violations)


def test_empty_scheme_rejected():
    doc = binary_rubric_doc()
    doc["scheme"]["criteria"] = []
    with pytest.raises(RubricValidationError) as exc:
        validate_rubric(doc)
    assert any(v.code == "EmptyScheme" for v in exc.value.violations)


def test_never_partially_accepts():
    # two independent violations are both reported
    doc = binary_rubric_doc(("R1", "R1"))
    doc["scheme"]["criteria"][0]["points"] = 0
    with pytest.raises(RubricValidationError) as exc:
        validate_rubric(doc)
    assert len(exc.value.violations) >= 2


def test_total_score_all_ones_is_nine():
    rubric = validate_rubric(binary_rubric_doc([f"R{i}" for i in range(1, 10)]))
    sv = make_score_vector(rubric, {f"R{i}": 1 for i in range(1, 10)})
    assert total_score(rubric, sv) == 9


def test_total_score_all_zero():
    rubric = validate_rubric(binary_rubric_doc())
    sv = make_score_vector(rubric, {c: 0 for c in ("R1", "R2", "R3")})
    assert total_score(rubric, sv) == 0


def test_total_score_ordinal_identity():
    rubric = validate_rubric(ordinal_rubric_doc())
    sv = make_score_vector(rubric, 3)
    assert total_score(rubric, sv) == 3
    assert max_score(rubric) == 4


def test_scheme_mismatch():
    binary = validate_rubric(binary_rubric_doc())
    ordinal = validate_rubric(ordinal_rubric_doc())
    with pytest.raises(SchemeMismatch):
        make_score_vector(binary, 2)
    with pytest.raises(SchemeMismatch):
        make_score_vector(ordinal, {"R1": 1})
    sv = make_score_vector(ordinal, 1)
    with pytest.raises(SchemeMismatch):
        total_score(binary, sv)


def test_score_vector_exhaustive_keys():
    rubric = validate_rubric(binary_rubric_doc())
    with pytest.raises(InvalidScoreVector):
        make_score_vector(rubric, {"R1": 1, "R2": 0})  # missing R3
    with pytest.raises(InvalidScoreVector):
        make_score_vector(rubric, {"R1": 1, "R2": 0, "R3": 0, "R4": 1})  # extra
    with pytest.raises(InvalidScoreVector):
        make_score_vector(rubric, {"R1": 2, "R2": 0, "R3": 0})  # non-binary


def test_ordinal_value_bounds():
    rubric = validate_rubric(ordinal_rubric_doc())
    with pytest.raises(InvalidScoreVector):
        make_score_vector(rubric, 5)
    with pytest.raises(InvalidScoreVector):
        make_score_vector(rubric, -1)
    assert make_score_vector(rubric, {"score": 2}).values == 2


@given(st.lists(st.sampled_from([0, 1]), min_size=9, max_size=9))
def test_total_between_zero_and_max(bits):
    rubric = validate_rubric(binary_rubric_doc([f"R{i}" for i in range(1, 10)]))
    sv = make_score_vector(rubric, {f"R{i}": bits[i - 1] for i in range(1, 10)})
    assert 0 <= total_score(rubric, sv) <= max_score(rubric)
