from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adcpred.chem import (
    EmptyList,
    EmptySequence,
    NonPositiveScore,
    harmonic_mean_similarity,
    sequence_identity,
)


def lcs_length(a: str, b: str) -> int:
    """Quadratic reference recursion, memoized."""

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == 0 or j == 0:
            return 0
        if a[i - 1] == b[j - 1]:
            return rec(i - 1, j - 1) + 1
        return max(rec(i - 1, j), rec(i, j - 1))

    return rec(len(a), len(b))


def test_identity_hand_cases():
    assert sequence_identity("ACDEFG", "ACDEFG") == 1.0
    assert sequence_identity("AAAA", "CCCC") == 0.0
    # LCS("GATTACA", "GCATGCU") = 4 ("GATC" or similar), max len 7
    assert sequence_identity("GATTACA", "GCATGCU") == pytest.approx(4 / 7)
    assert sequence_identity("AB", "BA") == pytest.approx(1 / 2)
    assert sequence_identity("A", "AAAA") == pytest.approx(1 / 4)


def test_identity_symmetric():
    assert sequence_identity("MKV", "MKKV") == sequence_identity("MKKV", "MKV")


seqs = st.text(alphabet="ACDEFGHIKLMNPQRSTVWY", min_size=1, max_size=18)


@settings(max_examples=300, deadline=None)
@given(seqs, seqs)
def test_identity_matches_reference(a, b):
    expected = lcs_length(a, b) / max(len(a), len(b))
    assert sequence_identity(a, b) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seqs)
def test_self_identity_is_one(a):
    assert sequence_identity(a, a) == 1.0


def test_identity_rejects_empty():
    with pytest.raises(EmptySequence):
        sequence_identity("", "ACD")
    with pytest.raises(EmptySequence):
        sequence_identity("ACD", "")


def test_harmonic_hand_cases():
    assert harmonic_mean_similarity([1.0, 1.0, 1.0]) == 1.0
    assert harmonic_mean_similarity([0.5]) == 0.5
    # 2 / (1/1 + 1/0.5) = 2/3
    assert harmonic_mean_similarity([1.0, 0.5]) == pytest.approx(2 / 3)
    # 5 components at 0.8 except one stinker at 0.1 drags hard
    val = harmonic_mean_similarity([0.8, 0.8, 0.8, 0.8, 0.1])
    assert val == pytest.approx(5 / (4 / 0.8 + 10))


def test_harmonic_errors():
    with pytest.raises(EmptyList):
        harmonic_mean_similarity([])
    with pytest.raises(NonPositiveScore):
        harmonic_mean_similarity([0.5, 0.0])
    with pytest.raises(NonPositiveScore):
        harmonic_mean_similarity([0.5, -0.1])


positive_lists = st.lists(
    st.floats(min_value=1e-6, max_value=1.0, allow_nan=False), min_size=1, max_size=10)


@settings(max_examples=1000, deadline=None)
@given(positive_lists)
def test_harmonic_at_most_arithmetic(scores):
    h = harmonic_mean_similarity(scores)
    mean = sum(scores) / len(scores)
    assert h <= mean + 1e-12
    assert min(scores) - 1e-12 <= h <= max(scores) + 1e-12
