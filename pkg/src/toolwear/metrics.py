"""Binary-classifier evaluation: confusion counts, ACC/TPR/FPR/MCC, ROC.

The positive class defaults to 0 (unworn): a true positive is a correctly
predicted unworn tool. Pass positive_class=1 for the usual fault-positive
convention; accuracy and MCC are invariant under the swap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int
    positive_class: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """Counts with the opposite positive-class convention."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp,
                               fn=self.fp,
                               positive_class=1 - self.positive_class)


@dataclass(frozen=True)
class MetricSet:
    acc: float   # percent
    tpr: float
    fpr: float
    mcc: float


@dataclass(frozen=True)
class RocCurve:
    points: list[tuple[float, float]]  # (fpr, tpr), sorted
    auc: float


def _as_labels(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    bad = set(np.unique(arr)) - {0, 1}
    if bad:
        raise ValueError(f"{name} must contain only 0/1, got {sorted(bad)}")
    return arr.astype(np.int64)


def confusion(y_true, y_pred, positive_class: int = 0) -> ConfusionMatrix:
    """Count TP/FP/TN/FN with respect to the stated positive class."""
    if positive_class not in (0, 1):
        raise ValueError("positive_class must be 0 or 1")
    yt = _as_labels(y_true, "y_true")
    yp = _as_labels(y_pred, "y_pred")
    if yt.shape[0] != yp.shape[0]:
        raise ValueError(
            f"length mismatch: {yt.shape[0]} true vs {yp.shape[0]} predicted")
    if yt.shape[0] == 0:
        raise ValueError("cannot evaluate zero predictions")
    pos_t = yt == positive_class
    pos_p = yp == positive_class
    return ConfusionMatrix(
        tp=int(np.sum(pos_t & pos_p)),
        fp=int(np.sum(~pos_t & pos_p)),
        tn=int(np.sum(~pos_t & ~pos_p)),
        fn=int(np.sum(pos_t & ~pos_p)),
        positive_class=positive_class)


def accuracy(cm: ConfusionMatrix) -> float:
    """Correct fraction as a percentage."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total * 100.0


def tpr_fpr(cm: ConfusionMatrix) -> tuple[float, float]:
    """(true positive rate, false positive rate)."""
    if cm.tp + cm.fn == 0:
        raise ValueError("no positive-class rows: TPR undefined")
    if cm.fp + cm.tn == 0:
        raise ValueError("no negative-class rows: FPR undefined")
    return cm.tp / (cm.tp + cm.fn), cm.fp / (cm.fp + cm.tn)


def mcc(cm: ConfusionMatrix) -> float:
    """Matthews correlation coefficient; 0 when any marginal is empty."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    tp, fp, tn, fn = cm.tp, cm.fp, cm.tn, cm.fn
    denom = (tp + fn) * (tp + fp) * (tn + fn) * (tn + fp)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def roc(y_true, scores, positive_class: int = 0) -> RocCurve:
    """ROC curve from class-1 scores.

    `scores` are class-1 vote fractions regardless of the positive-class
    convention; when positive_class is 0 the curve is computed over the
    complement score. Thresholds sweep the unique score values plus sentinels
    beyond both ends, predicting positive when score >= threshold, so the
    curve always starts at (0,0) and ends at (1,1). AUC is the trapezoidal
    area, which equals the ranking (Mann-Whitney) statistic.
    """
    yt = _as_labels(y_true, "y_true")
    s = np.asarray(scores, dtype=np.float64)
    if yt.shape[0] != s.shape[0]:
        raise ValueError("y_true and scores must have equal length")
    if yt.shape[0] == 0:
        raise ValueError("cannot build a ROC curve from zero rows")
    if positive_class not in (0, 1):
        raise ValueError("positive_class must be 0 or 1")
    pos = yt == positive_class
    n_pos = int(np.sum(pos))
    n_neg = int(yt.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes in y_true")
    pos_score = s if positive_class == 1 else 1.0 - s

    thresholds = np.concatenate(
        ([np.inf], np.unique(pos_score)[::-1], [-np.inf]))
    points: list[tuple[float, float]] = []
    for thr in thresholds:
        predicted_pos = pos_score >= thr
        tp = int(np.sum(predicted_pos & pos))
        fp = int(np.sum(predicted_pos & ~pos))
        pt = (fp / n_neg, tp / n_pos)
        if not points or points[-1] != pt:
            points.append(pt)
    auc = 0.0
    for (f0, t0), (f1, t1) in zip(points, points[1:]):
        auc += 0.5 * (t0 + t1) * (f1 - f0)
    return RocCurve(points=points, auc=auc)


@dataclass(frozen=True)
class EvaluationReport:
    """Everything the evaluate stage emits for one model/test-set pair."""

    cm: ConfusionMatrix
    metrics: MetricSet
    roc: RocCurve

    def to_text(self) -> str:
        lines = ["toolwear-evaluation 1",
                 f"positive_class {self.cm.positive_class}",
                 f"tp {self.cm.tp}",
                 f"fp {self.cm.fp}",
                 f"tn {self.cm.tn}",
                 f"fn {self.cm.fn}",
                 f"acc {self.metrics.acc!r}",
                 f"tpr {self.metrics.tpr!r}",
                 f"fpr {self.metrics.fpr!r}",
                 f"mcc {self.metrics.mcc!r}",
                 f"auc {self.roc.auc!r}",
                 f"roc_points {len(self.roc.points)}"]
        lines.extend(f"{f!r},{t!r}" for f, t in self.roc.points)
        return "\n".join(lines) + "\n"


def evaluate(y_true, y_pred, scores, positive_class: int = 0
             ) -> EvaluationReport:
    """Confusion counts, the four scalar metrics, and the ROC curve."""
    cm = confusion(y_true, y_pred, positive_class)
    tpr, fpr = tpr_fpr(cm)
    report = MetricSet(acc=accuracy(cm), tpr=tpr, fpr=fpr, mcc=mcc(cm))
    curve = roc(y_true, scores, positive_class)
    return EvaluationReport(cm=cm, metrics=report, roc=curve)
