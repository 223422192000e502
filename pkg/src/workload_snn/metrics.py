"""Binary classification metrics with class 1 as the positive class."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import RangeError, ShapeError


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    f1: float
    precision: float
    recall: float

    def to_dict(self) -> dict:
        return asdict(self)


def _ratio(num: int, den: int) -> float:
    # zero-division convention: an undefined ratio counts as 0
    return num / den if den else 0.0


def compute_metrics(y_true, y_pred) -> MetricsReport:
    t = np.asarray(y_true).reshape(-1)
    p = np.asarray(y_pred).reshape(-1)
    if t.shape != p.shape:
        raise ShapeError(f"label vectors differ in length: {t.size} vs {p.size}")
    if t.size == 0:
        raise ShapeError("no labels to score")
    for name, v in (("y_true", t), ("y_pred", p)):
        if not np.isin(v, (0, 1)).all():
            raise RangeError(f"{name} must contain only 0 and 1")
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    fn = int(np.sum((t == 1) & (p == 0)))
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * tp, 2 * tp + fp + fn)
    return MetricsReport(float(np.mean(t == p)), f1, precision, recall)
