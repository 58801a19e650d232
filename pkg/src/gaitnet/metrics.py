"""Classification metrics: confusion matrix, per-class rates, ROC/AUC.

Conventions: per-class accuracy is that class's recall (confusion
diagonal over row sum), the "Average" accuracy is the overall fraction
of correct predictions, and macro averages are arithmetic means of
per-class values. AUC comes from
trapezoidal integration of the threshold-swept ROC curve, which equals
the Mann-Whitney statistic with ties counted one half.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .skeleton import CLASS_MANIFEST_NAMES, NUM_CLASSES


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, num_classes: int = NUM_CLASSES) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be equal-length 1-D arrays")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def roc_auc(scores: np.ndarray, labels: np.ndarray, cls: int):
    """One-vs-rest ROC points and trapezoid AUC for class cls.

    Args:
        scores: (N, C) class probabilities or (N,) scores for cls.
        labels: (N,) integer labels.
        cls: the positive class.

    Returns:
        (points, auc) where points is a list of (fpr, tpr) pairs from
        (0,0) to (1,1), one step per distinct score.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    s = scores[:, cls] if scores.ndim == 2 else scores
    if s.shape != labels.shape:
        raise ValueError("scores and labels must align")
    pos = labels == cls
    n_pos = int(pos.sum())
    n_neg = int(s.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"class {cls} needs at least one positive and one negative sample")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    pos_sorted = pos[order].astype(np.float64)
    tp = np.cumsum(pos_sorted)
    fp = np.cumsum(1.0 - pos_sorted)
    # keep one point per distinct score: the last index of each run
    last = np.nonzero(np.diff(s_sorted))[0]
    keep = np.concatenate([last, [s_sorted.size - 1]])
    tpr = np.concatenate([[0.0], tp[keep] / n_pos])
    fpr = np.concatenate([[0.0], fp[keep] / n_neg])
    auc = float(np.trapezoid(tpr, fpr))
    points = [(float(x), float(y)) for x, y in zip(fpr, tpr)]
    return points, auc


@dataclass
class MetricsReport:
    """Evaluation results for one test split (or averaged over folds)."""

    confusion: np.ndarray
    per_class: dict  # class name -> {accuracy, precision, recall, f1}; None when undefined
    auc: dict  # class name -> float | None
    roc: dict = field(default_factory=dict)  # class name -> [(fpr, tpr), ...]
    accuracy: float = 0.0  # overall fraction correct ("Average" column)
    macro: dict = field(default_factory=dict)  # precision/recall/f1/auc macro means
    train_loss: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "confusion": [[int(v) for v in row] for row in self.confusion],
            "per_class": self.per_class,
            "auc": self.auc,
            "roc": {k: [[x, y] for x, y in v] for k, v in self.roc.items()},
            "accuracy": self.accuracy,
            "macro": self.macro,
            "train_loss": list(self.train_loss),
            "test_loss": list(self.test_loss),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            confusion=np.asarray(d["confusion"], dtype=np.int64),
            per_class={k: dict(v) for k, v in d["per_class"].items()},
            auc=dict(d["auc"]),
            roc={k: [(x, y) for x, y in v] for k, v in d.get("roc", {}).items()},
            accuracy=d["accuracy"],
            macro=dict(d.get("macro", {})),
            train_loss=list(d.get("train_loss", [])),
            test_loss=list(d.get("test_loss", [])),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, MetricsReport) and self.to_dict() == other.to_dict()


def _mean_defined(values: list) -> float | None:
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def report_from_predictions(
    y_true: np.ndarray, probs: np.ndarray, num_classes: int = NUM_CLASSES
) -> MetricsReport:
    """Build a MetricsReport from true labels and class probabilities."""
    y_true = np.asarray(y_true, dtype=np.intp)
    if y_true.size == 0:
        raise ValueError("empty test set")
    y_pred = probs.argmax(axis=1)
    cm = confusion_matrix(y_true, y_pred, num_classes)
    names = CLASS_MANIFEST_NAMES[:num_classes]
    per_class: dict = {}
    auc: dict = {}
    roc: dict = {}
    diag = np.diag(cm).astype(np.float64)
    rows = cm.sum(axis=1).astype(np.float64)
    cols = cm.sum(axis=0).astype(np.float64)
    for c, name in enumerate(names):
        recall = float(diag[c] / rows[c]) if rows[c] > 0 else None
        precision = float(diag[c] / cols[c]) if cols[c] > 0 else None
        if recall is None:
            f1 = None
        else:
            p = precision if precision is not None else 0.0
            f1 = float(2 * p * recall / (p + recall)) if (p + recall) > 0 else 0.0
        per_class[name] = {"accuracy": recall, "precision": precision, "recall": recall, "f1": f1}
        try:
            roc[name], auc[name] = roc_auc(probs, y_true, c)
        except ValueError:
            auc[name] = None
    macro = {
        "precision": _mean_defined([per_class[n]["precision"] for n in names]),
        "recall": _mean_defined([per_class[n]["recall"] for n in names]),
        "f1": _mean_defined([per_class[n]["f1"] for n in names]),
        "auc": _mean_defined([auc[n] for n in names]),
    }
    return MetricsReport(
        confusion=cm,
        per_class=per_class,
        auc=auc,
        roc=roc,
        accuracy=float(diag.sum() / y_true.size),
        macro=macro,
    )


def average_reports(reports: list[MetricsReport]) -> MetricsReport:
    """Fold-averaged report: summed confusion, mean metrics over folds."""
    if not reports:
        raise ValueError("no reports to average")
    names = list(reports[0].per_class.keys())
    confusion = np.sum([r.confusion for r in reports], axis=0)
    per_class: dict = {}
    auc: dict = {}
    for name in names:
        per_class[name] = {
            key: _mean_defined([r.per_class[name][key] for r in reports])
            for key in ("accuracy", "precision", "recall", "f1")
        }
        auc[name] = _mean_defined([r.auc[name] for r in reports])
    macro = {
        key: _mean_defined([r.macro.get(key) for r in reports]) for key in ("precision", "recall", "f1", "auc")
    }
    return MetricsReport(
        confusion=confusion,
        per_class=per_class,
        auc=auc,
        roc={},
        accuracy=float(np.mean([r.accuracy for r in reports])),
        macro=macro,
    )
