"""
Data Audit for Schema-aware Datasets
Counts valid, blank and out-of-domain cells, category histograms, descriptive statistics and class balance
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from dataset.schema import MISSING, Dataset, Severity

logger = logging.getLogger(__name__)


@dataclass
class AttributeAudit:
    """Audit figures for one attribute"""
    name: str
    kind: str
    valid: int
    missing: int
    blank: int
    out_of_domain: int
    frequencies: Dict[str, int] = field(default_factory=dict)
    labels: Dict[str, str] = field(default_factory=dict)
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    mean: Optional[float] = None
    std: Optional[float] = None

    @property
    def complete_percent(self) -> float:
        total = self.valid + self.missing
        return 100.0 * self.valid / total if total else 100.0


@dataclass
class AuditReport:
    """Data audit of a whole dataset"""
    record_count: int
    complete_records: int
    attributes: List[AttributeAudit]
    class_counts: Dict[str, int]

    @property
    def total_missing(self) -> int:
        return sum(a.missing for a in self.attributes)

    @property
    def total_blank(self) -> int:
        return sum(a.blank for a in self.attributes)

    @property
    def complete_records_percent(self) -> float:
        return 100.0 * self.complete_records / self.record_count if self.record_count else 100.0

    def missing_counts(self) -> Dict[str, int]:
        return {a.name: a.missing for a in self.attributes}

    def blank_counts(self) -> Dict[str, int]:
        return {a.name: a.blank for a in self.attributes}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "record_count": self.record_count,
            "complete_records": self.complete_records,
            "complete_records_percent": round(self.complete_records_percent, 2),
            "total_missing": self.total_missing,
            "total_blank": self.total_blank,
            "class_counts": dict(self.class_counts),
            "attributes": [
                {**asdict(a), "complete_percent": round(a.complete_percent, 2)}
                for a in self.attributes
            ],
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for a in self.attributes:
            rows.append({
                "Attribute": a.name,
                "Type": a.kind,
                "Valid": a.valid,
                "Blank": a.blank,
                "Out of domain": a.out_of_domain,
                "Missing": a.missing,
                "% Complete": round(a.complete_percent, 2),
                "Min": a.minimum,
                "Max": a.maximum,
                "Mean": None if a.mean is None else round(a.mean, 2),
                "Std": None if a.std is None else round(a.std, 2),
            })
        return pd.DataFrame(rows)

    def render_text(self) -> str:
        lines = [
            f"Records: {self.record_count}  "
            f"(complete: {self.complete_records}, {self.complete_records_percent:.2f}%)",
            "Class distribution: " + ", ".join(f"{k}: {v}" for k, v in self.class_counts.items()),
            "",
        ]
        if self.attributes:
            lines.append(self.to_frame().to_string(index=False, na_rep="-"))
            lines.append("")
        lines.append(f"Total missing cells: {self.total_missing} (blank markers: {self.total_blank})")
        for a in self.attributes:
            if a.frequencies:
                histogram = ", ".join(
                    f"{code} ({a.labels.get(code, code)}): {count}"
                    for code, count in a.frequencies.items()
                )
                lines.append(f"  {a.name}: {histogram}")
        return "\n".join(lines)

    def write_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return path


def audit(ds: Dataset) -> AuditReport:
    """
    Audit a dataset

    Args:
        ds: dataset to audit (MISSING cells allowed)

    Returns:
        AuditReport with per-attribute counts, histograms and class counts
    """

    if len(ds) == 0:
        logger.warning("Auditing an empty dataset")

    attributes = []
    for index, attr in enumerate(ds.schema):
        column = ds.column(index)
        missing = sum(1 for v in column if v is MISSING)
        out_of_domain = sum(1 for r in ds.records if index in r.coerced)
        present = [v for v in column if v is not MISSING]

        entry = AttributeAudit(
            name=attr.name,
            kind=attr.kind.value,
            valid=len(present),
            missing=missing,
            blank=missing - out_of_domain,
            out_of_domain=out_of_domain,
        )
        if attr.is_categorical:
            entry.frequencies = {str(code): sum(1 for v in present if v == code) for code in attr.categories}
            entry.labels = {str(code): attr.label_for(code) for code in attr.categories}
        elif present:
            values = np.asarray(present, dtype=float)
            entry.minimum = float(values.min())
            entry.maximum = float(values.max())
            entry.mean = float(values.mean())
            entry.std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        attributes.append(entry)

    counts = ds.class_counts()
    report = AuditReport(
        record_count=len(ds),
        complete_records=sum(1 for r in ds.records if not r.has_missing()),
        attributes=attributes,
        class_counts={s.name.lower(): counts[s] for s in Severity},
    )
    logger.info(
        f"Audit: {report.record_count} records, {report.total_missing} missing cells, "
        f"{report.complete_records} complete records"
    )
    return report
