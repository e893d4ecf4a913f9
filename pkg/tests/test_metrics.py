import math

import numpy as np
import pytest

from adcpred.metrics import (
    ConfusionCounts,
    Empty,
    LengthMismatch,
    MetricReport,
    NoPositives,
    SingleClass,
    compute_metrics,
    confusion,
    mean_std,
    pr_auc,
    roc_auc,
    score_report,
)


def brute_force_metrics(tp, fp, tn, fn):
    """Independent reference: each formula written out separately."""
    out = {}
    out["ppv"] = tp / (tp + fp) if tp + fp else None
    out["npv"] = tn / (tn + fn) if tn + fn else None
    out["se"] = tp / (tp + fn) if tp + fn else None
    out["sp"] = tn / (tn + fp) if tn + fp else None
    out["acc"] = (tp + tn) / (tp + fp + tn + fn)
    out["f1"] = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else None
    if out["se"] is None or out["sp"] is None:
        out["ba"] = None
    else:
        out["ba"] = (out["se"] + out["sp"]) / 2
    den = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    out["mcc"] = (tp * tn - fp * fn) / den if den else None
    return out


def brute_force_auc(scores, labels):
    """All positive/negative pairs, ties at half credit."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def test_confusion_hand_case():
    scores = [0.9, 0.8, 0.4, 0.3, 0.5]
    labels = [1, 0, 1, 0, 1]
    c = confusion(scores, labels)
    # ties at the threshold predict positive: 0.5 -> positive
    assert (c.tp, c.fp, c.tn, c.fn) == (2, 1, 1, 1)
    assert c.total == 5


def test_confusion_validation():
    with pytest.raises(LengthMismatch):
        confusion([0.5], [1, 0])
    with pytest.raises(Empty):
        confusion([], [])
    with pytest.raises(ValueError):
        confusion([0.5], [2])
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1, fp=0, tn=0, fn=0)


def test_metrics_against_reference_sweep():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        tp, fp, tn, fn = (int(x) for x in rng.integers(0, 40, size=4))
        if tp + fp + tn + fn == 0:
            continue
        got = compute_metrics(ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn))
        want = brute_force_metrics(tp, fp, tn, fn)
        for name, expected in want.items():
            actual = getattr(got, name)
            if expected is None:
                assert actual is None, (name, tp, fp, tn, fn)
            else:
                assert actual == pytest.approx(expected, abs=1e-12), name


def test_degenerate_rows_are_none_not_zero():
    r = compute_metrics(ConfusionCounts(tp=0, fp=0, tn=5, fn=0))
    assert r.ppv is None and r.se is None and r.ba is None and r.mcc is None
    assert r.acc == 1.0
    with pytest.raises(Empty):
        compute_metrics(ConfusionCounts(tp=0, fp=0, tn=0, fn=0))


def test_perfect_classifier_metrics():
    r = compute_metrics(ConfusionCounts(tp=10, fp=0, tn=10, fn=0))
    assert r.acc == r.f1 == r.ba == r.mcc == 1.0
    assert r.ppv == r.npv == r.se == r.sp == 1.0


def test_roc_auc_hand_cases():
    assert roc_auc([0.9, 0.1], [1, 0]) == 1.0
    assert roc_auc([0.1, 0.9], [1, 0]) == 0.0
    assert roc_auc([0.5, 0.5], [1, 0]) == 0.5
    assert roc_auc([0.8, 0.6, 0.4], [1, 0, 1]) == pytest.approx(0.5)


def test_roc_auc_matches_pair_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(500):
        n = int(rng.integers(2, 200))
        labels = rng.integers(0, 2, size=n)
        if labels.sum() in (0, n):
            labels[0] = 1 - labels[0]
        # quantized scores force plenty of ties
        scores = np.round(rng.random(n), 2)
        assert roc_auc(scores, labels) == pytest.approx(
            brute_force_auc(scores, labels), abs=1e-12)


def test_roc_auc_single_class_raises():
    with pytest.raises(SingleClass):
        roc_auc([0.2, 0.8], [1, 1])
    with pytest.raises(SingleClass):
        roc_auc([0.2, 0.8], [0, 0])


def brute_force_pr_auc(scores, labels):
    """Average precision from scratch at each distinct threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = labels.sum()
    area = 0.0
    prev_recall = 0.0
    for t in sorted(set(scores), reverse=True):
        pred = scores >= t
        tp = int((pred & (labels == 1)).sum())
        fp = int((pred & (labels == 0)).sum())
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += precision * (recall - prev_recall)
        prev_recall = recall
    return area


def test_pr_auc_hand_and_reference():
    assert pr_auc([0.9, 0.1], [1, 0]) == 1.0
    rng = np.random.default_rng(13)
    for _ in range(200):
        n = int(rng.integers(2, 80))
        labels = rng.integers(0, 2, size=n)
        if labels.sum() == 0:
            labels[0] = 1
        scores = np.round(rng.random(n), 2)
        assert pr_auc(scores, labels) == pytest.approx(
            brute_force_pr_auc(scores, labels), abs=1e-12)


def test_pr_auc_no_positives_raises():
    with pytest.raises(NoPositives):
        pr_auc([0.2, 0.8], [0, 0])


def test_score_report_combines_everything():
    scores = [0.9, 0.8, 0.4, 0.3]
    labels = [1, 0, 1, 0]
    r = score_report(scores, labels)
    assert r.auc == pytest.approx(brute_force_auc(scores, labels))
    assert r.acc == 0.5
    assert r.pr_auc is not None


def test_score_report_absent_aucs():
    r = score_report([0.9, 0.8], [1, 1])
    assert r.auc is None          # single class
    assert r.pr_auc is not None   # positives exist
    r = score_report([0.1, 0.2], [0, 0])
    assert r.auc is None and r.pr_auc is None


def test_metric_report_as_dict():
    r = MetricReport(acc=0.5)
    d = r.as_dict()
    assert d["acc"] == 0.5 and d["auc"] is None
    assert tuple(d) == MetricReport.FIELDS


def test_mean_std():
    m, s = mean_std([1.0, 2.0, 3.0])
    assert m == 2.0 and s == pytest.approx(1.0)
    m, s = mean_std([5.0])
    assert m == 5.0 and s == 0.0
    with pytest.raises(Empty):
        mean_std([])
