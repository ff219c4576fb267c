"""Classification metrics: confusion matrix, accuracy, per-class P/R/F1.

Accuracy is correct-over-total (the multiclass reading of the usual
TP/TN formula); precision, recall and F1 are one-vs-rest per class with
the zero convention: a metric whose denominator is 0 is defined as 0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .labels import CLASS_NAMES, NUM_CLASSES


class LengthMismatch(ValueError):
    pass


class LabelOutOfRange(ValueError):
    pass


class EmptyMatrix(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = samples with true class i predicted as class j."""

    counts: np.ndarray
    n: int


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ClassReport:
    per_class: tuple[ClassMetrics, ...]
    accuracy: float
    macro_f1: float


def _as_labels(values, what: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size:
        ints = arr.astype(np.int64)
        if (ints != arr).any() or ints.min() < 0 or ints.max() >= NUM_CLASSES:
            raise LabelOutOfRange(f"{what} contains labels outside 0..{NUM_CLASSES - 1}")
        return ints
    return arr.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = _as_labels(y_true, "y_true")
    p = _as_labels(y_pred, "y_pred")
    if len(t) != len(p):
        raise LengthMismatch(f"y_true has {len(t)} labels, y_pred has {len(p)}")
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts=counts, n=int(len(t)))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.n == 0:
        raise EmptyMatrix("accuracy undefined on an empty matrix")
    return float(np.trace(cm.counts)) / cm.n


def precision_recall_f1(cm: ConfusionMatrix, k: int) -> tuple[float, float, float]:
    """One-vs-rest precision, recall and F1 for class k."""
    if cm.n == 0:
        raise EmptyMatrix("metrics undefined on an empty matrix")
    if not 0 <= k < NUM_CLASSES:
        raise LabelOutOfRange(f"class index {k} outside 0..{NUM_CLASSES - 1}")
    tp = float(cm.counts[k, k])
    fp = float(cm.counts[:, k].sum()) - tp
    fn = float(cm.counts[k, :].sum()) - tp
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def report(cm: ConfusionMatrix) -> ClassReport:
    """Per-class metrics in canonical order plus accuracy and macro-F1."""
    if cm.n == 0:
        raise EmptyMatrix("report undefined on an empty matrix")
    rows = []
    for k, name in enumerate(CLASS_NAMES):
        p, r, f = precision_recall_f1(cm, k)
        rows.append(ClassMetrics(name=name, precision=p, recall=r, f1=f))
    macro = sum(m.f1 for m in rows) / NUM_CLASSES
    return ClassReport(per_class=tuple(rows), accuracy=accuracy(cm), macro_f1=macro)


def report_to_csv(rep: ClassReport, path: str | Path | None = None) -> str:
    """Serialize a report as CSV. Floats use repr so a round-trip is exact."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["class", "precision", "recall", "f1"])
    for m in rep.per_class:
        writer.writerow([m.name, repr(m.precision), repr(m.recall), repr(m.f1)])
    writer.writerow(["accuracy", repr(rep.accuracy)])
    writer.writerow(["macro_f1", repr(rep.macro_f1)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def report_from_csv(text: str) -> ClassReport:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header != ["class", "precision", "recall", "f1"]:
        raise ValueError(f"unexpected report header: {header}")
    per_class = []
    accuracy_v = macro = None
    for row in body:
        if row[0] == "accuracy":
            accuracy_v = float(row[1])
        elif row[0] == "macro_f1":
            macro = float(row[1])
        else:
            per_class.append(ClassMetrics(row[0], float(row[1]), float(row[2]), float(row[3])))
    if accuracy_v is None or macro is None or len(per_class) != NUM_CLASSES:
        raise ValueError("report CSV is incomplete")
    return ClassReport(per_class=tuple(per_class), accuracy=accuracy_v, macro_f1=macro)


def confusion_to_csv(cm: ConfusionMatrix, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["true\\pred", *CLASS_NAMES])
    for i, name in enumerate(CLASS_NAMES):
        writer.writerow([name, *cm.counts[i].tolist()])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def format_report(rep: ClassReport) -> str:
    """Fixed-width table for terminal output."""
    lines = [f"{'class':<12}{'precision':>10}{'recall':>10}{'f1':>10}"]
    for m in rep.per_class:
        lines.append(f"{m.name:<12}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}")
    lines.append(f"{'accuracy':<12}{rep.accuracy:>10.4f}")
    lines.append(f"{'macro_f1':<12}{rep.macro_f1:>10.4f}")
    return "\n".join(lines)
