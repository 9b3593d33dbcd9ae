import random

import pytest
from hypothesis import given, strategies as st

from scoreloop.errors import EmptySeries, SingleLevelRange
from scoreloop.metrics import (
    LabelSeries,
    cohen_kappa,
    criterion_report,
    quadratic_weighted_kappa,
)

from oracle_kappa import brute_force_cohen, brute_force_qwk


def series_from_confusion(matrix, lo=0):
    pairs = []
    for i, row in enumerate(matrix):
        for j, count in enumerate(row):
            pairs.extend([(lo + i, lo + j)] * count)
    hi = lo + len(matrix) - 1
    return LabelSeries(pairs=tuple(pairs), value_range=(lo, hi))


def test_identical_vectors_give_one():
    series = LabelSeries(pairs=((0, 0), (1, 1), (1, 1), (0, 0)), value_range=(0, 1))
    assert cohen_kappa(series) == 1.0


def test_kappa_hand_case_point_eight():
    # p_o = 0.90, p_e = 0.50 -> kappa = 0.8 exactly
    series = series_from_confusion([[45, 5], [5, 45]])
    assert cohen_kappa(series) == pytest.approx(0.8, abs=1e-15)


def test_kappa_hand_case_point_two():
    # p_o = 0.6, p_e = 0.5 -> 0.2
    series = series_from_confusion([[30, 20], [20, 30]])
    assert cohen_kappa(series) == pytest.approx(0.2, abs=1e-15)


def test_qwk_identical_on_zero_to_four():
    pairs = tuple((v, v) for v in (0, 1, 2, 3, 4, 4, 0))
    assert quadratic_weighted_kappa(LabelSeries(pairs=pairs, value_range=(0, 4))) == 1.0


def test_qwk_antipodal_is_minus_one():
    # sum w*O = 2, sum w*E = 1 -> 1 - 2 = -1
    series = LabelSeries(pairs=((0, 4), (4, 0)), value_range=(0, 4))
    assert quadratic_weighted_kappa(series) == pytest.approx(-1.0, abs=1e-15)


def test_degenerate_constant_columns():
    # both raters constant: p_e = 1; perfect agreement reports 1.0
    same = LabelSeries(pairs=((1, 1), (1, 1)), value_range=(0, 1))
    assert cohen_kappa(same) == 1.0
    assert quadratic_weighted_kappa(same) == 1.0
    # constant but disagreeing columns report 0.0
    diff = LabelSeries(pairs=((1, 0), (1, 0)), value_range=(0, 1))
    assert cohen_kappa(diff) == 0.0
    assert quadratic_weighted_kappa(diff) == 0.0


def test_empty_series_rejected():
    with pytest.raises(EmptySeries):
        LabelSeries(pairs=(), value_range=(0, 1))


def test_out_of_range_pair_rejected():
    with pytest.raises(EmptySeries):
        LabelSeries(pairs=((0, 5),), value_range=(0, 4))


def test_single_level_range_rejected():
    series = LabelSeries(pairs=((3, 3),), value_range=(3, 3))
    with pytest.raises(SingleLevelRange):
        quadratic_weighted_kappa(series)


def random_series(rng, max_k=5, max_n=12):
    k = rng.randint(2, max_k)
    n = rng.randint(1, max_n)
    lo = rng.randint(-2, 2)
    hi = lo + k - 1
    pairs = tuple((rng.randint(lo, hi), rng.randint(lo, hi)) for _ in range(n))
    return LabelSeries(pairs=pairs, value_range=(lo, hi))


def test_oracle_equivalence_thousand_series():
    rng = random.Random(20240517)
    for _ in range(1000):
        series = random_series(rng)
        lo, hi = series.value_range
        pairs = list(series.pairs)
        assert cohen_kappa(series) == pytest.approx(
            brute_force_cohen(pairs, lo, hi), abs=1e-12
        )
        assert quadratic_weighted_kappa(series) == pytest.approx(
            brute_force_qwk(pairs, lo, hi), abs=1e-12
        )


@given(
    st.lists(
        st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40
    )
)
def test_binary_qwk_equals_cohen(pairs):
    series = LabelSeries(pairs=tuple(pairs), value_range=(0, 1))
    assert quadratic_weighted_kappa(series) == pytest.approx(
        cohen_kappa(series), abs=1e-12
    )


@given(
    st.lists(
        st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=30
    )
)
def test_metrics_symmetric_under_rater_swap(pairs):
    series = LabelSeries(pairs=tuple(pairs), value_range=(0, 4))
    swapped = LabelSeries(
        pairs=tuple((p, h) for h, p in pairs), value_range=(0, 4)
    )
    assert cohen_kappa(series) == pytest.approx(cohen_kappa(swapped), abs=1e-12)
    assert quadratic_weighted_kappa(series) == pytest.approx(
        quadratic_weighted_kappa(swapped), abs=1e-12
    )


@given(
    st.lists(
        st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=2, max_size=20
    ),
    st.randoms(use_true_random=False),
)
def test_metrics_invariant_under_pair_permutation(pairs, rnd):
    series = LabelSeries(pairs=tuple(pairs), value_range=(0, 3))
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    permuted = LabelSeries(pairs=tuple(shuffled), value_range=(0, 3))
    assert cohen_kappa(series) == cohen_kappa(permuted)
    assert quadratic_weighted_kappa(series) == quadratic_weighted_kappa(permuted)


@given(
    st.lists(
        st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=20
    ),
    st.integers(-5, 5),
)
def test_qwk_invariant_under_common_shift(pairs, shift):
    series = LabelSeries(pairs=tuple(pairs), value_range=(0, 4))
    shifted = LabelSeries(
        pairs=tuple((h + shift, p + shift) for h, p in pairs),
        value_range=(shift, 4 + shift),
    )
    assert quadratic_weighted_kappa(series) == pytest.approx(
        quadratic_weighted_kappa(shifted), abs=1e-12
    )


def test_criterion_report_counts():
    # 10 hand-tallied pairs: 2 fp, 3 fn, 5 correct
    pairs = [
        (0, 1), (0, 1),            # false positives
        (1, 0), (1, 0), (1, 0),    # false negatives
        (1, 1), (1, 1), (0, 0), (0, 0), (1, 1),
    ]
    rep = criterion_report("R1", pairs, (0, 1))
    assert rep.fp_count == 2
    assert rep.fn_count == 3
    assert rep.fp_count + rep.fn_count + round(rep.accuracy * len(pairs)) == len(pairs)
    assert rep.confusion == ((2, 2), (3, 3))
