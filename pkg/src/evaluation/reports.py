"""
Evaluation Reports
Per-model, per-partition reports and the side-by-side comparison of several models
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from evaluation.curves import CurvePoints, gain_curve, gain_summary, roc_curve, scored_samples
from evaluation.metrics import ConfusionMatrix, Metrics, confusion, format_percent, metrics

logger = logging.getLogger(__name__)

PARTITION_ORDER = ("train", "test")


@dataclass
class EvalReport:
    """Evaluation of one model on one partition"""
    model: str
    partition: str
    confusion: ConfusionMatrix
    metrics: Metrics
    auc: Optional[float] = None
    gain: Dict[str, float] = field(default_factory=dict)
    roc: Optional[CurvePoints] = None
    gain_points: Optional[CurvePoints] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "partition": self.partition,
            "confusion": self.confusion.to_dict(),
            "metrics": self.metrics.to_dict(),
            "auc": self.auc,
            "gain": dict(self.gain),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "EvalReport":
        try:
            values = payload["metrics"]
            return cls(
                model=payload["model"],
                partition=payload["partition"],
                confusion=ConfusionMatrix(**payload["confusion"]),
                metrics=Metrics(values["accuracy"], values["sensitivity"], values["specificity"]),
                auc=payload.get("auc"),
                gain=dict(payload.get("gain", {})),
            )
        except (KeyError, TypeError) as e:
            raise ValueError(f"invalid evaluation report: {e}") from e

    def write_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        return path

    def write_curves(self, directory: Union[str, Path]) -> List[Path]:
        """One x,y CSV per curve kind"""
        directory = Path(directory)
        written = []
        for curve in (self.roc, self.gain_points):
            if curve is not None:
                written.append(curve.write_csv(directory / f"{self.model}_{self.partition}_{curve.kind}.csv"))
        return written


def evaluate(model: str, partition: str, preds: Sequence[int], scores: Sequence[float],
             truth: Sequence[int]) -> EvalReport:
    """
    Build an EvalReport from predictions and graded scores

    Args:
        model: model name
        partition: "train" or "test"
        preds: predicted classes
        scores: graded scores, higher = more malignant
        truth: desired classes

    Returns:
        EvalReport; AUC and gain are left empty when the partition lacks a class
    """
    cm = confusion(preds, truth)
    report = EvalReport(model=model, partition=partition, confusion=cm, metrics=metrics(cm))
    samples = scored_samples(scores, truth)
    if cm.positives and cm.negatives:
        report.roc = roc_curve(samples)
        report.auc = report.roc.area
    else:
        logger.warning(f"{model}/{partition}: single-class partition, AUC undefined")
    if cm.positives:
        report.gain_points = gain_curve(samples)
        report.gain = gain_summary(report.gain_points)
    return report


@dataclass
class ComparisonReport:
    """Side-by-side view of several EvalReports"""
    reports: List[EvalReport]

    def _ordered(self) -> List[EvalReport]:
        models = list(dict.fromkeys(r.model for r in self.reports))
        rank = {p: i for i, p in enumerate(PARTITION_ORDER)}
        return sorted(self.reports, key=lambda r: (models.index(r.model), rank.get(r.partition, len(rank)),
                                                   r.partition))

    def metrics_frame(self) -> pd.DataFrame:
        rows = []
        for r in self._ordered():
            rows.append({
                "model": r.model,
                "partition": r.partition,
                "accuracy": format_percent(r.metrics.accuracy),
                "sensitivity": format_percent(r.metrics.sensitivity),
                "specificity": format_percent(r.metrics.specificity),
                "false positive rate": format_percent(r.metrics.false_positive_rate),
            })
        return pd.DataFrame(rows)

    def confusion_frame(self) -> pd.DataFrame:
        rows = []
        for r in self._ordered():
            for desired, counts in zip(("benign", "malignant"), r.confusion.as_rows()):
                rows.append({"model": r.model, "partition": r.partition, "desired": desired,
                             "pred. benign": counts[0], "pred. malignant": counts[1]})
        return pd.DataFrame(rows)

    def auc_ranking(self, partition: str = "test") -> List[Dict[str, Any]]:
        """Models ordered by AUC, best first"""
        scored = [r for r in self.reports if r.partition == partition and r.auc is not None]
        scored.sort(key=lambda r: (-r.auc, r.model))
        return [{"rank": i + 1, "model": r.model, "auc": r.auc} for i, r in enumerate(scored)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reports": [r.to_dict() for r in self._ordered()],
            "auc_ranking": self.auc_ranking(),
        }

    def render_text(self) -> str:
        sections = ["Confusion matrices", self.confusion_frame().to_string(index=False), "",
                    "Statistical measures", self.metrics_frame().to_string(index=False), ""]
        ranking = self.auc_ranking()
        if ranking:
            frame = pd.DataFrame(ranking)
            frame["auc"] = frame["auc"].map(lambda v: f"{v:.3f}")
            sections.extend(["Area under the ROC curve (test)", frame.to_string(index=False)])
        return "\n".join(sections)


def compare_report(reports: Sequence[EvalReport]) -> ComparisonReport:
    """
    Combine per-model reports

    Args:
        reports: at least one EvalReport

    Returns:
        ComparisonReport with JSON and text renderings
    """
    if not reports:
        raise ValueError("compare_report needs at least one report")
    return ComparisonReport(list(reports))


def load_report(path: Union[str, Path]) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
