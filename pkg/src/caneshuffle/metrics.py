"""Multi-class evaluation: confusion matrix, per-class metrics, curves, CIs.

Per-class ratios are computed with exact integer numerators/denominators and
divided once at the end, so they agree with brute-force oracles to the bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CaneError

Z_95 = 1.959964  # two-sided 95% normal quantile


def confusion(true_labels, predicted_labels, num_classes: int) -> np.ndarray:
    """K x K counts, rows = true class, columns = predicted class."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise CaneError(f"label vectors differ in length: {t.shape} vs {p.shape}")
    if t.size and (t.min() < 0 or t.max() >= num_classes):
        raise CaneError("true label out of range")
    if p.size and (p.min() < 0 or p.max() >= num_classes):
        raise CaneError("predicted label out of range")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def _per_class_counts(cm: np.ndarray, c: int) -> tuple[int, int, int, int]:
    total = int(cm.sum())
    tp = int(cm[c, c])
    fp = int(cm[:, c].sum()) - tp
    fn = int(cm[c, :].sum()) - tp
    tn = total - tp - fp - fn
    return tp, fp, fn, tn


@dataclass
class ClassMetrics:
    label: int
    support: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    ci_low: float
    ci_high: float
    degenerate: bool = False  # precision + recall == 0


def accuracy(cm: np.ndarray) -> float:
    total = int(cm.sum())
    if total == 0:
        raise CaneError("empty confusion matrix")
    return int(np.trace(cm)) / total


def precision_recall_f1(cm: np.ndarray) -> list[ClassMetrics]:
    total = int(cm.sum())
    if total == 0:
        raise CaneError("empty confusion matrix")
    out = []
    for c in range(cm.shape[0]):
        tp, fp, fn, tn = _per_class_counts(cm, c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        acc = (tp + tn) / total
        support = tp + fn
        lo, hi = wilson_ci(tp, support) if support else (0.0, 1.0)
        out.append(ClassMetrics(c, support, prec, rec, f1, acc, lo, hi,
                                degenerate=(prec + rec == 0.0)))
    return out


def macro_f1(cm: np.ndarray) -> float:
    per_class = precision_recall_f1(cm)
    return sum(m.f1 for m in per_class) / len(per_class)


def wilson_ci(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise CaneError("trials must be positive")
    if not 0 <= successes <= trials:
        raise CaneError("successes must lie in [0, trials]")
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def roc_auc(scores, labels) -> tuple[list[tuple[float, float]], float]:
    """One-vs-rest ROC curve points (FPR, TPR) and trapezoidal AUC.

    Ties are handled by grouping equal scores into one threshold step.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    pos = int(y.sum())
    neg = len(y) - pos
    if pos == 0 or neg == 0:
        raise CaneError("AUC undefined: need at least one positive and one negative")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:
            j += 1
        tp += int(y[i:j].sum())
        fp += (j - i) - int(y[i:j].sum())
        points.append((fp / neg, tp / pos))
        i = j
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2
    return points, auc


def pr_curve_ap(scores, labels) -> tuple[list[tuple[float, float]], float]:
    """Precision-recall points (recall, precision) and step-sum average precision."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    pos = int(y.sum())
    if pos == 0:
        raise CaneError("AP undefined: no positive samples")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    points = []
    ap = 0.0
    tp = 0
    prev_recall = 0.0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:
            j += 1
        tp += int(y[i:j].sum())
        precision = tp / j
        recall = tp / pos
        points.append((recall, precision))
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j
    return points, ap


@dataclass
class EvaluationReport:
    class_names: list[str]
    cm: np.ndarray
    per_class: list[ClassMetrics] = field(default_factory=list)
    per_class_auc: dict[str, float] = field(default_factory=dict)
    per_class_ap: dict[str, float] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return accuracy(self.cm)

    @property
    def macro_precision(self) -> float:
        return sum(m.precision for m in self.per_class) / len(self.per_class)

    @property
    def macro_recall(self) -> float:
        return sum(m.recall for m in self.per_class) / len(self.per_class)

    @property
    def macro_f1(self) -> float:
        return sum(m.f1 for m in self.per_class) / len(self.per_class)

    @property
    def weighted_f1(self) -> float:
        total = sum(m.support for m in self.per_class)
        return sum(m.f1 * m.support for m in self.per_class) / total

    def to_json(self) -> str:
        return json.dumps({
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "per_class": [
                {
                    "class": self.class_names[m.label],
                    "support": m.support,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "accuracy": m.accuracy,
                    "ci_low": m.ci_low,
                    "ci_high": m.ci_high,
                    "degenerate": m.degenerate,
                    "auc": self.per_class_auc.get(self.class_names[m.label]),
                    "ap": self.per_class_ap.get(self.class_names[m.label]),
                }
                for m in self.per_class
            ],
        }, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["class", "support", "precision", "recall", "f1", "accuracy",
                    "ci_low", "ci_high", "degenerate", "auc", "ap"])
        for m in self.per_class:
            name = self.class_names[m.label]
            w.writerow([name, m.support, m.precision, m.recall, m.f1, m.accuracy,
                        m.ci_low, m.ci_high, m.degenerate,
                        self.per_class_auc.get(name, ""), self.per_class_ap.get(name, "")])
        w.writerow([])
        w.writerow(["overall_accuracy", self.accuracy])
        w.writerow(["macro_precision", self.macro_precision])
        w.writerow(["macro_recall", self.macro_recall])
        w.writerow(["macro_f1", self.macro_f1])
        w.writerow(["weighted_f1", self.weighted_f1])
        return buf.getvalue()


def report(true_labels, predicted_labels, class_names,
           scores: np.ndarray | None = None) -> EvaluationReport:
    """Full evaluation; `scores` (N, K) enables per-class ROC/PR summaries."""
    k = len(class_names)
    cm = confusion(true_labels, predicted_labels, k)
    rep = EvaluationReport(list(class_names), cm, precision_recall_f1(cm))
    if scores is not None:
        scores = np.asarray(scores, dtype=np.float64)
        t = np.asarray(true_labels, dtype=np.int64)
        for c, name in enumerate(class_names):
            onevsrest = (t == c).astype(np.int64)
            if 0 < onevsrest.sum() < len(onevsrest):
                rep.per_class_auc[name] = roc_auc(scores[:, c], onevsrest)[1]
                rep.per_class_ap[name] = pr_curve_ap(scores[:, c], onevsrest)[1]
    return rep
