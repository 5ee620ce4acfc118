"""Classification metrics: accuracy, per-class F1, macro F1, confusion matrix."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch
from .hypnogram import StageLabel

NUM_CLASSES = len(StageLabel)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_f1: float
    per_class_f1: dict[StageLabel, float]
    confusion: np.ndarray  # (5, 5) ints, rows = true label, cols = prediction
    n_test: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "accuracy": self.accuracy,
                "macro_f1": self.macro_f1,
                "per_class_f1": {label.name: f1 for label, f1 in self.per_class_f1.items()},
                "confusion": self.confusion.reshape(-1).tolist(),
                "n_test": self.n_test,
            },
            indent=2,
        )


def compute_metrics(predictions, labels) -> MetricsReport:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise LengthMismatch(
            f"{predictions.size} predictions vs {labels.size} labels"
        )
    if predictions.size == 0:
        raise EmptyInput("cannot compute metrics on an empty set")
    if labels.min() < 0 or labels.max() >= NUM_CLASSES or predictions.min() < 0 \
            or predictions.max() >= NUM_CLASSES:
        raise LengthMismatch(f"labels/predictions must lie in 0..{NUM_CLASSES - 1}")

    confusion = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)

    per_class: dict[StageLabel, float] = {}
    for label in StageLabel:
        c = int(label)
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        denom = 2 * tp + fp + fn
        per_class[label] = 2 * tp / denom if denom > 0 else 0.0

    return MetricsReport(
        accuracy=float(np.trace(confusion) / predictions.size),
        macro_f1=float(np.mean(list(per_class.values()))),
        per_class_f1=per_class,
        confusion=confusion,
        n_test=int(predictions.size),
    )
