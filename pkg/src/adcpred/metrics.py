"""Binary classification metrics with explicit degenerate behavior.

Every threshold metric that would divide by zero is reported as None
rather than silently clamped, so seed-averaged tables never absorb
fabricated zeros. Specificity uses the standard TN/(TN+FP); balanced
accuracy is the mean of sensitivity and specificity.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import AdcpredError


class LengthMismatch(AdcpredError):
    pass


class Empty(AdcpredError):
    pass


class SingleClass(AdcpredError):
    pass


class NoPositives(AdcpredError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricReport:
    ppv: float | None = None
    npv: float | None = None
    se: float | None = None
    sp: float | None = None
    acc: float | None = None
    f1: float | None = None
    ba: float | None = None
    mcc: float | None = None
    auc: float | None = None
    pr_auc: float | None = None

    FIELDS = ("ppv", "npv", "se", "sp", "acc", "f1", "ba", "mcc", "auc", "pr_auc")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


def _check_pair(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape[0] != labels.shape[0]:
        raise LengthMismatch(f"{scores.shape[0]} scores vs {labels.shape[0]} labels")
    if scores.shape[0] == 0:
        raise Empty("no samples")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    return scores, labels.astype(np.int64)


def confusion(scores, labels, threshold: float = 0.5) -> ConfusionCounts:
    """Tally predictions at a threshold; ties (score == threshold) are
    predicted positive."""
    scores, labels = _check_pair(scores, labels)
    pred = scores >= threshold
    pos = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def compute_metrics(c: ConfusionCounts) -> MetricReport:
    """Threshold metrics from a confusion matrix; zero denominators
    yield absent entries instead of raising."""
    if c.total == 0:
        raise Empty("empty confusion matrix")
    tp, fp, tn, fn = c.tp, c.fp, c.tn, c.fn
    se = _ratio(tp, tp + fn)
    sp = _ratio(tn, tn + fp)
    mcc_den = math.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    return MetricReport(
        ppv=_ratio(tp, tp + fp),
        npv=_ratio(tn, tn + fn),
        se=se,
        sp=sp,
        acc=(tp + tn) / c.total,
        f1=_ratio(2 * tp, 2 * tp + fn + fp),
        ba=(se + sp) / 2 if se is not None and sp is not None else None,
        mcc=(tp * tn - fp * fn) / mcc_den if mcc_den > 0 else None,
    )


def roc_auc(scores, labels) -> float:
    """Probability that a positive outranks a negative, ties counted
    half. Computed via average ranks, exact over all pairs."""
    scores, labels = _check_pair(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("roc_auc needs both classes")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    i = 0
    while i < sorted_scores.shape[0]:
        j = i
        while j + 1 < sorted_scores.shape[0] and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1  # average 1-based rank
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


def pr_auc(scores, labels) -> float:
    """Area under the precision-recall step curve.

    Thresholds sweep the distinct scores from high to low; precision is
    held constant across each recall step (sum of precision times recall
    increment), which is the average-precision form of the area.
    """
    scores, labels = _check_pair(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoPositives("pr_auc needs at least one positive")
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = 0
    fp = 0
    area = 0.0
    prev_recall = 0.0
    i = 0
    n = scores.shape[0]
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        tp += int(sorted_labels[i : j + 1].sum())
        fp += (j - i + 1) - int(sorted_labels[i : j + 1].sum())
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += precision * (recall - prev_recall)
        prev_recall = recall
        i = j + 1
    return area


def score_report(scores, labels, threshold: float = 0.5) -> MetricReport:
    """Threshold metrics plus both AUCs in one report; AUCs are absent
    when the label set cannot support them."""
    report = compute_metrics(confusion(scores, labels, threshold))
    try:
        auc = roc_auc(scores, labels)
    except SingleClass:
        auc = None
    try:
        ap = pr_auc(scores, labels)
    except NoPositives:
        ap = None
    return dataclasses.replace(report, auc=auc, pr_auc=ap)


def mean_std(values) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation; a single value has
    deviation zero."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise Empty("mean_std of empty list")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1))
