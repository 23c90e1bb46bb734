"""
Attribute Schema and Record Types for the Mammographic Mass Dataset
Declares attribute kinds, permitted domains, the MISSING marker and the immutable Dataset container
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Dict, List, Optional, Tuple, Union

from utils.errors import SchemaError


class AttributeKind(str, Enum):
    """Measurement level of an attribute"""
    ORDINAL = "ordinal"
    NOMINAL = "nominal"
    CONTINUOUS = "continuous"


class Severity(IntEnum):
    """Binary target class"""
    BENIGN = 0
    MALIGNANT = 1


class _Missing:
    """Singleton marker for a missing cell"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISSING"

    def __reduce__(self):
        return (_Missing, ())


MISSING = _Missing()
MISSING_TOKEN = "?"

Cell = Union[int, float, _Missing]


def is_missing(value: Any) -> bool:
    return value is MISSING


@dataclass(frozen=True)
class AttributeSchema:
    """One column of the dataset"""
    name: str
    kind: AttributeKind
    categories: Tuple[int, ...] = ()
    value_range: Optional[Tuple[float, float]] = None
    predictive: bool = True
    labels: Dict[int, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind == AttributeKind.CONTINUOUS:
            if self.value_range is None:
                raise SchemaError(f"continuous attribute '{self.name}' needs a value range")
            low, high = self.value_range
            if low > high:
                raise SchemaError(f"attribute '{self.name}': range min {low} exceeds max {high}")
        else:
            if not self.categories:
                raise SchemaError(f"categorical attribute '{self.name}' has an empty domain")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"attribute '{self.name}' has duplicate category codes")
            if self.kind == AttributeKind.ORDINAL and list(self.categories) != sorted(self.categories):
                raise SchemaError(f"ordinal attribute '{self.name}' must list codes in increasing order")

    @property
    def is_categorical(self) -> bool:
        return self.kind != AttributeKind.CONTINUOUS

    def contains(self, value: Union[int, float]) -> bool:
        """Check whether a non-missing value lies inside the declared domain"""
        if self.is_categorical:
            return value in self.categories
        low, high = self.value_range
        return low <= value <= high

    def rank(self, code: int) -> int:
        """Position of a category code in the (ordered) domain"""
        return self.categories.index(code)

    def label_for(self, code: int) -> str:
        return self.labels.get(code, str(code))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "categories": list(self.categories),
            "value_range": list(self.value_range) if self.value_range else None,
            "predictive": self.predictive,
        }


@dataclass(frozen=True)
class Record:
    """One row: attribute cells plus the (never missing) severity label"""
    values: Tuple[Cell, ...]
    label: Severity
    # attribute indices whose raw value fell outside the domain and was coerced to MISSING
    coerced: Tuple[int, ...] = field(default=(), compare=False)

    def has_missing(self) -> bool:
        return any(v is MISSING for v in self.values)

    def replace_values(self, values: Tuple[Cell, ...]) -> "Record":
        return Record(values=tuple(values), label=self.label, coerced=self.coerced)


@dataclass(frozen=True)
class Dataset:
    """Schema plus records; validated on construction and immutable afterwards"""
    schema: Tuple[AttributeSchema, ...]
    records: Tuple[Record, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "records", tuple(self.records))
        arity = len(self.schema)
        for index, record in enumerate(self.records):
            if len(record.values) != arity:
                raise SchemaError(
                    f"record {index} has {len(record.values)} cells, schema declares {arity}"
                )
            for attr, value in zip(self.schema, record.values):
                if value is MISSING:
                    continue
                if not attr.contains(value):
                    raise SchemaError(
                        f"record {index}: value {value} outside the domain of '{attr.name}'"
                    )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def attribute_names(self) -> List[str]:
        return [attr.name for attr in self.schema]

    def attribute_index(self, name: str) -> int:
        for index, attr in enumerate(self.schema):
            if attr.name == name:
                return index
        raise SchemaError(f"unknown attribute '{name}'; known: {', '.join(self.attribute_names)}")

    def column(self, index: int) -> List[Cell]:
        return [record.values[index] for record in self.records]

    def labels(self) -> List[int]:
        return [int(record.label) for record in self.records]

    def class_counts(self) -> Dict[Severity, int]:
        counts = {Severity.BENIGN: 0, Severity.MALIGNANT: 0}
        for record in self.records:
            counts[record.label] += 1
        return counts

    def missing_count(self) -> int:
        return sum(1 for record in self.records for v in record.values if v is MISSING)

    def subset(self, indices) -> "Dataset":
        return Dataset(self.schema, tuple(self.records[i] for i in indices))

    def with_records(self, records) -> "Dataset":
        return Dataset(self.schema, tuple(records))


# UCI mammographic mass attributes; BI-RADS codes outside 0-5 (6 and 55 occur in the file) load as MISSING
MAMMOGRAPHIC_SCHEMA: Tuple[AttributeSchema, ...] = (
    AttributeSchema(
        name="bi_rads",
        kind=AttributeKind.ORDINAL,
        categories=(0, 1, 2, 3, 4, 5),
        predictive=False,
        labels={
            0: "Assessment incomplete",
            1: "Negative",
            2: "Benign findings",
            3: "Probably benign",
            4: "Suspicious abnormality",
            5: "Highly suggestive of malignancy",
        },
    ),
    AttributeSchema(name="age", kind=AttributeKind.CONTINUOUS, value_range=(0.0, 120.0)),
    AttributeSchema(
        name="shape",
        kind=AttributeKind.NOMINAL,
        categories=(1, 2, 3, 4),
        labels={1: "Round", 2: "Oval", 3: "Lobular", 4: "Irregular"},
    ),
    AttributeSchema(
        name="margin",
        kind=AttributeKind.NOMINAL,
        categories=(1, 2, 3, 4, 5),
        labels={1: "Circumscribed", 2: "Microlobulated", 3: "Obscured", 4: "Ill-defined", 5: "Spiculated"},
    ),
    AttributeSchema(
        name="density",
        kind=AttributeKind.ORDINAL,
        categories=(1, 2, 3, 4),
        labels={1: "High", 2: "Iso", 3: "Low", 4: "Fat-containing"},
    ),
)


def schema_from_dicts(entries: List[Dict[str, Any]]) -> Tuple[AttributeSchema, ...]:
    """Rebuild a schema from its serialized form"""
    schema = []
    for entry in entries:
        value_range = entry.get("value_range")
        schema.append(AttributeSchema(
            name=entry["name"],
            kind=AttributeKind(entry["kind"]),
            categories=tuple(entry.get("categories") or ()),
            value_range=tuple(value_range) if value_range else None,
            predictive=bool(entry.get("predictive", True)),
        ))
    return tuple(schema)
