"""Aggregate similarity helpers for novelty scoring."""

from __future__ import annotations

import numpy as np

from ..errors import AdcpredError


class NonPositiveScore(AdcpredError):
    pass


class EmptyList(AdcpredError):
    pass


class EmptySequence(AdcpredError):
    pass


def harmonic_mean_similarity(scores) -> float:
    """n / sum(1/s): dominated by the weakest component score."""
    scores = list(scores)
    if not scores:
        raise EmptyList("harmonic mean of an empty list")
    for s in scores:
        if s <= 0:
            raise NonPositiveScore(f"harmonic mean requires positive scores, got {s}")
    return len(scores) / sum(1.0 / s for s in scores)


def sequence_identity(a: str, b: str) -> float:
    """Identity of the best global alignment, by matched positions.

    Scoring is match +1, mismatch 0, gap 0, so the optimum equals the
    longest common subsequence; identity is matches / max length.
    """
    if not a or not b:
        raise EmptySequence("sequence identity of an empty string")
    if a == b:
        return 1.0
    av = np.frombuffer(a.encode("utf-8"), dtype=np.uint8)
    bv = np.frombuffer(b.encode("utf-8"), dtype=np.uint8)
    prev = np.zeros(len(bv) + 1, dtype=np.int32)
    row = np.zeros_like(prev)
    for ch in av:
        cand = np.maximum(prev[1:], prev[:-1] + (bv == ch))
        np.maximum.accumulate(cand, out=row[1:])
        prev, row = row, prev
    return float(prev[-1]) / max(len(av), len(bv))
