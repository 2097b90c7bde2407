"""Multi-class evaluation: confusion matrix, per-class precision/recall/F1
and one-vs-rest rates, Cohen's kappa, ROC curves with trapezoidal AUC.

Zero-denominator conventions (documented, total functions): precision with
an empty predicted column is 0, F1 with zero precision and recall is 0,
kappa with expected agreement 1 is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # C x C, rows = true class, cols = predicted
    n_classes: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class ClassStats:
    precision: float
    recall: float
    f1: float
    support: int
    ppv: float
    npv: float
    sensitivity: float
    specificity: float


@dataclass
class ClassReport:
    per_class: list[ClassStats]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    kappa: float

    def to_dict(self) -> dict:
        return {
            "per_class": [vars(s) for s in self.per_class],
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "kappa": self.kappa,
        }


@dataclass
class RocCurve:
    points: list[tuple[float, float]]  # (fpr, tpr), (0,0) .. (1,1)
    auc: float


def confusion(y_true, y_pred, n_classes: int) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if len(y_true) != len(y_pred):
        raise DataError("y_true and y_pred must have equal length")
    for name, y in (("y_true", y_true), ("y_pred", y_pred)):
        if len(y) and (y.min() < 0 or y.max() >= n_classes):
            raise DataError(f"{name} contains labels outside [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts=counts, n_classes=n_classes)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def class_report(cm: ConfusionMatrix) -> ClassReport:
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise DataError("cannot build a report from an empty confusion matrix")
    C = cm.n_classes
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    per_class = []
    for c in range(C):
        tp = float(counts[c, c])
        fp = float(col[c] - counts[c, c])
        fn = float(row[c] - counts[c, c])
        tn = float(total - tp - fp - fn)
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class.append(
            ClassStats(
                precision=precision,
                recall=recall,
                f1=f1,
                support=int(row[c]),
                ppv=precision,
                npv=_safe_div(tn, tn + fn),
                sensitivity=recall,
                specificity=_safe_div(tn, tn + fp),
            )
        )
    accuracy = float(np.trace(counts)) / total
    p_e = float(np.sum(row.astype(float) * col.astype(float))) / (total * total)
    kappa = 0.0 if p_e == 1.0 else (accuracy - p_e) / (1.0 - p_e)
    return ClassReport(
        per_class=per_class,
        accuracy=accuracy,
        macro_precision=float(np.mean([s.precision for s in per_class])),
        macro_recall=float(np.mean([s.recall for s in per_class])),
        macro_f1=float(np.mean([s.f1 for s in per_class])),
        kappa=float(kappa),
    )


def roc_curve(scores, y_true, positive_class: int) -> RocCurve:
    """One-vs-rest ROC for one class: thresholds swept over descending
    unique scores, tied scores grouped, AUC by trapezoidal integration."""
    scores = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=int)
    if len(scores) != len(y_true):
        raise DataError("scores and y_true must have equal length")
    pos = y_true == positive_class
    n_pos = int(pos.sum())
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError(
            f"ROC for class {positive_class} needs both positives and negatives"
        )
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = pos[order].astype(np.int64)
    tp = np.cumsum(sorted_pos)
    fp = np.cumsum(1 - sorted_pos)
    # keep one point per distinct score (the last index of each tie group)
    distinct = np.r_[sorted_scores[1:] != sorted_scores[:-1], True]
    tpr = tp[distinct] / n_pos
    fpr = fp[distinct] / n_neg
    points = [(0.0, 0.0)] + list(zip(fpr.tolist(), tpr.tolist()))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    trapezoid = getattr(np, "trapezoid", np.trapz)
    auc = float(trapezoid(ys, xs))
    return RocCurve(points=points, auc=auc)


def multiclass_roc(proba: np.ndarray, y_true) -> tuple[dict[int, RocCurve], float]:
    """One-vs-rest curve per class plus the macro-average AUC. Classes
    absent from y_true are skipped."""
    proba = np.asarray(proba, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=int)
    curves: dict[int, RocCurve] = {}
    for c in range(proba.shape[1]):
        n_pos = int((y_true == c).sum())
        if n_pos == 0 or n_pos == len(y_true):
            continue
        curves[c] = roc_curve(proba[:, c], y_true, c)
    if not curves:
        raise DataError("no class has both positives and negatives")
    macro_auc = float(np.mean([c.auc for c in curves.values()]))
    return curves, macro_auc
