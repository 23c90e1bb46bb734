"""
ROC and Cumulative-gain Curves
Threshold sweeps over scored samples with tied scores moving as one block, trapezoidal and pair-counting AUC
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from dataset.schema import Severity


@dataclass(frozen=True)
class ScoredSample:
    """A graded prediction; higher score = more malignant"""
    score: float
    truth: Severity

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"sample score must be finite, got {self.score}")


@dataclass
class CurvePoints:
    """Ordered (x, y) points from (0, 0) to (1, 1)"""
    kind: str  # "roc" or "gain"
    points: List[Tuple[float, float]] = field(default_factory=list)
    area: Optional[float] = None

    @property
    def xs(self) -> List[float]:
        return [p[0] for p in self.points]

    @property
    def ys(self) -> List[float]:
        return [p[1] for p in self.points]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.points, columns=["x", "y"])

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.10g")
        return path


def scored_samples(scores: Sequence[float], truth: Sequence[int]) -> List[ScoredSample]:
    if len(scores) != len(truth):
        raise ValueError(f"length mismatch: {len(scores)} scores, {len(truth)} labels")
    return [ScoredSample(float(s), Severity(int(t))) for s, t in zip(scores, truth)]


def _tied_blocks(samples: Sequence[ScoredSample]) -> List[Tuple[int, int]]:
    """(positives, negatives) per distinct score, highest score first"""
    frame = pd.DataFrame({
        "score": [s.score for s in samples],
        "positive": [int(s.truth == Severity.MALIGNANT) for s in samples],
    })
    grouped = frame.groupby("score", sort=True)["positive"].agg(["sum", "count"])
    grouped = grouped.iloc[::-1]
    return [(int(pos), int(count - pos)) for pos, count in zip(grouped["sum"], grouped["count"])]


def _class_totals(samples: Sequence[ScoredSample]) -> Tuple[int, int]:
    positives = sum(1 for s in samples if s.truth == Severity.MALIGNANT)
    return positives, len(samples) - positives


def roc_curve(samples: Sequence[ScoredSample]) -> CurvePoints:
    """
    Sensitivity against 1 - specificity over every distinct threshold

    Args:
        samples: scored samples with at least one of each class

    Returns:
        CurvePoints of kind "roc" with its trapezoidal area
    """
    positives, negatives = _class_totals(samples)
    if positives == 0 or negatives == 0:
        raise ValueError("ROC curve needs at least one sample of each class")

    points = [(0.0, 0.0)]
    tp = fp = 0
    for block_pos, block_neg in _tied_blocks(samples):
        tp += block_pos
        fp += block_neg
        points.append((fp / negatives, tp / positives))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))

    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    area = float(np.sum((xs[1:] - xs[:-1]) * (ys[1:] + ys[:-1]) / 2.0))
    return CurvePoints(kind="roc", points=points, area=area)


def auc(samples: Sequence[ScoredSample]) -> float:
    """Area under the ROC curve (trapezoidal)"""
    return roc_curve(samples).area


def mann_whitney_auc(samples: Sequence[ScoredSample]) -> float:
    """
    Fraction of (positive, negative) pairs ranked correctly, ties counting one half

    Args:
        samples: scored samples with at least one of each class

    Returns:
        AUC in [0, 1]
    """
    pos = np.array([s.score for s in samples if s.truth == Severity.MALIGNANT])
    neg = np.array([s.score for s in samples if s.truth == Severity.BENIGN])
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("AUC needs at least one sample of each class")
    diff = pos[:, None] - neg[None, :]
    return float((np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / (len(pos) * len(neg)))


def gain_curve(samples: Sequence[ScoredSample]) -> CurvePoints:
    """
    Fraction of all positives captured against the fraction of samples targeted

    Args:
        samples: scored samples with at least one positive

    Returns:
        CurvePoints of kind "gain", one step per sample; positives are spread evenly inside a tied block
    """
    positives, _ = _class_totals(samples)
    if positives == 0:
        raise ValueError("gain curve needs at least one positive sample")

    n = len(samples)
    points = [(0.0, 0.0)]
    targeted = 0
    captured = 0.0
    for block_pos, block_neg in _tied_blocks(samples):
        size = block_pos + block_neg
        for _ in range(size):
            targeted += 1
            captured += block_pos / size
            points.append((targeted / n, min(1.0, captured / positives)))
    points[-1] = (1.0, 1.0)
    return CurvePoints(kind="gain", points=points)


def gain_at(curve: CurvePoints, fraction: float) -> float:
    """Captured fraction at the given targeted fraction, linear between points"""
    if curve.kind != "gain":
        raise ValueError(f"expected a gain curve, got '{curve.kind}'")
    return float(np.interp(fraction, curve.xs, curve.ys))


def gain_summary(curve: CurvePoints, fractions: Sequence[float] = (0.1, 0.2, 0.3)) -> Dict[str, float]:
    return {f"top_{int(round(100 * f))}": gain_at(curve, f) for f in fractions}
