"""
Confusion Matrix and Scalar Measures
Counts with malignant as the positive class; accuracy, sensitivity, specificity and false-positive rate
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from dataset.schema import Severity

UNDEFINED = "undefined"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts; positive = malignant"""
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"confusion count {name} must be nonnegative")

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp

    def as_rows(self) -> List[List[int]]:
        """Desired-output rows (benign, malignant) by predicted columns (benign, malignant)"""
        return [[self.tn, self.fp], [self.fn, self.tp]]

    def to_frame(self) -> pd.DataFrame:
        labels = [Severity.BENIGN.name.lower(), Severity.MALIGNANT.name.lower()]
        return pd.DataFrame(self.as_rows(),
                            index=pd.Index(labels, name="desired"),
                            columns=pd.Index(labels, name="predicted"))

    def to_dict(self) -> Dict[str, int]:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class Metrics:
    """Fractions in [0, 1]; None marks an undefined measure"""
    accuracy: Optional[float]
    sensitivity: Optional[float]
    specificity: Optional[float]

    @property
    def false_positive_rate(self) -> Optional[float]:
        return None if self.specificity is None else 1.0 - self.specificity

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "false_positive_rate": self.false_positive_rate,
        }


def confusion(preds: Sequence[int], truth: Sequence[int]) -> ConfusionMatrix:
    """
    Count predictions against the truth

    Args:
        preds: predicted classes (0 benign, 1 malignant)
        truth: desired classes

    Returns:
        ConfusionMatrix
    """
    preds = [int(p) for p in preds]
    truth = [int(t) for t in truth]
    if len(preds) != len(truth):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(truth)} labels")
    if not preds:
        raise ValueError("cannot build a confusion matrix from empty input")

    tp = sum(1 for p, t in zip(preds, truth) if p == 1 and t == 1)
    tn = sum(1 for p, t in zip(preds, truth) if p == 0 and t == 0)
    fp = sum(1 for p, t in zip(preds, truth) if p == 1 and t == 0)
    fn = sum(1 for p, t in zip(preds, truth) if p == 0 and t == 1)
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator > 0 else None


def metrics(cm: ConfusionMatrix) -> Metrics:
    """accuracy = (tp+tn)/n, sensitivity = tp/(tp+fn), specificity = tn/(tn+fp)"""
    return Metrics(
        accuracy=_ratio(cm.tp + cm.tn, cm.n),
        sensitivity=_ratio(cm.tp, cm.positives),
        specificity=_ratio(cm.tn, cm.negatives),
    )


def format_percent(value: Optional[float]) -> str:
    """Two-decimal percentage, or 'undefined'"""
    return UNDEFINED if value is None else f"{100.0 * value:.2f}%"


def summarize(values: Sequence[Optional[float]]) -> Dict[str, Any]:
    """Mean and sample standard deviation over the defined values"""
    series = pd.Series([v for v in values if v is not None], dtype=float)
    if series.empty:
        return {"mean": None, "std": None, "n": 0}
    return {
        "mean": float(series.mean()),
        "std": float(series.std(ddof=1)) if len(series) > 1 else 0.0,
        "n": int(len(series)),
    }
