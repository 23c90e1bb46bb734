"""
Numeric Feature Encoding
Turns complete records into fixed-width real vectors for the MLP and SVM
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from dataset.schema import MISSING, AttributeKind, AttributeSchema, Dataset, schema_from_dicts
from utils.errors import ModelFormatError, MissingValueError

logger = logging.getLogger(__name__)


@dataclass
class EncodingConfig:
    """Encoding options"""
    include_non_predictive: bool = False  # adds BI-RADS as a scaled ordinal column

    def to_dict(self) -> Dict[str, Any]:
        return {"include_non_predictive": self.include_non_predictive}


@dataclass(frozen=True)
class ColumnDescriptor:
    """Maps an encoded column back to its attribute"""
    attribute: str
    role: str  # "onehot", "ordinal" or "scaled"
    category: Optional[int] = None


@dataclass(frozen=True)
class FeatureMatrix:
    """Encoded rows, labels and column descriptors"""
    rows: np.ndarray
    labels: np.ndarray
    columns: Tuple[ColumnDescriptor, ...]

    @property
    def width(self) -> int:
        return len(self.columns)

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    def onehot_groups(self) -> Dict[str, List[int]]:
        groups: Dict[str, List[int]] = {}
        for index, column in enumerate(self.columns):
            if column.role == "onehot":
                groups.setdefault(column.attribute, []).append(index)
        return groups


@dataclass
class FeatureEncoder:
    """
    Encoder fitted on a training partition
    Nominal -> one-hot, ordinal -> rank/(|domain|-1), continuous -> min-max on the fitted data
    """
    config: EncodingConfig = field(default_factory=EncodingConfig)
    schema: Tuple[AttributeSchema, ...] = ()
    scaling: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    def fit(self, ds: Dataset) -> "FeatureEncoder":
        self.schema = tuple(ds.schema)
        self.scaling = {}
        for index, attr in enumerate(self.schema):
            if attr.kind != AttributeKind.CONTINUOUS or not self._uses(attr):
                continue
            present = [v for v in ds.column(index) if v is not MISSING]
            if present:
                self.scaling[attr.name] = (float(min(present)), float(max(present)))
            else:
                self.scaling[attr.name] = attr.value_range
        logger.debug(f"Encoder fitted on {len(ds)} records: scaling={self.scaling}")
        return self

    def _uses(self, attr: AttributeSchema) -> bool:
        return attr.predictive or self.config.include_non_predictive

    @property
    def columns(self) -> Tuple[ColumnDescriptor, ...]:
        columns = []
        for attr in self.schema:
            if not self._uses(attr):
                continue
            if attr.kind == AttributeKind.NOMINAL:
                columns.extend(ColumnDescriptor(attr.name, "onehot", code) for code in attr.categories)
            elif attr.kind == AttributeKind.ORDINAL:
                columns.append(ColumnDescriptor(attr.name, "ordinal"))
            else:
                columns.append(ColumnDescriptor(attr.name, "scaled"))
        return tuple(columns)

    @property
    def width(self) -> int:
        return len(self.columns)

    def transform(self, ds: Dataset) -> FeatureMatrix:
        """Encode a dataset with the fitted parameters; test-side values are not clipped"""

        if not self.schema:
            raise ValueError("FeatureEncoder.transform called before fit")
        if [a.name for a in ds.schema] != [a.name for a in self.schema]:
            raise ModelFormatError("dataset schema does not match the fitted encoder")

        rows = np.zeros((len(ds), self.width), dtype=float)
        for r, record in enumerate(ds.records):
            position = 0
            for attr, value in zip(self.schema, record.values):
                if not self._uses(attr):
                    continue
                if value is MISSING:
                    raise MissingValueError(r, attr.name)
                if attr.kind == AttributeKind.NOMINAL:
                    rows[r, position + attr.rank(value)] = 1.0
                    position += len(attr.categories)
                elif attr.kind == AttributeKind.ORDINAL:
                    span = len(attr.categories) - 1
                    rows[r, position] = attr.rank(value) / span if span else 0.0
                    position += 1
                else:
                    low, high = self.scaling[attr.name]
                    rows[r, position] = (float(value) - low) / (high - low) if high > low else 0.0
                    position += 1

        labels = np.asarray(ds.labels(), dtype=int)
        return FeatureMatrix(rows=rows, labels=labels, columns=self.columns)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "schema": [a.to_dict() for a in self.schema],
            "scaling": {name: list(bounds) for name, bounds in self.scaling.items()},
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "FeatureEncoder":
        try:
            return cls(
                config=EncodingConfig(**payload["config"]),
                schema=schema_from_dicts(payload["schema"]),
                scaling={name: tuple(bounds) for name, bounds in payload["scaling"].items()},
            )
        except (KeyError, TypeError) as e:
            raise ModelFormatError(f"invalid encoder payload: {e}") from e


def encode(ds: Dataset, cfg: EncodingConfig = None,
           encoder: FeatureEncoder = None) -> FeatureMatrix:
    """
    Encode a complete dataset

    Args:
        ds: dataset without MISSING cells
        cfg: encoding options (ignored when a fitted encoder is given)
        encoder: encoder fitted on the training partition; fitted on ds when omitted

    Returns:
        FeatureMatrix
    """
    if encoder is None:
        encoder = FeatureEncoder(config=cfg or EncodingConfig()).fit(ds)
    return encoder.transform(ds)
