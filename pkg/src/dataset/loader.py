"""
Dataset Loader for UCI-format Files
Parses comma-separated records, coerces out-of-domain values and writes datasets back
"""

import logging
from pathlib import Path
from typing import Sequence, Union

from dataset.schema import (
    MAMMOGRAPHIC_SCHEMA,
    MISSING,
    MISSING_TOKEN,
    AttributeSchema,
    Cell,
    Dataset,
    Record,
    Severity,
)
from utils.errors import DataParseError

logger = logging.getLogger(__name__)


def parse_record(line: str, schema: Sequence[AttributeSchema] = MAMMOGRAPHIC_SCHEMA,
                 line_number: int = None) -> Record:
    """
    Parse one UCI line into a Record

    Args:
        line: comma-separated attribute values followed by the severity label
        schema: attribute declarations, in file column order
        line_number: 1-based line number carried by parse errors

    Returns:
        Record with MISSING for "?" cells and for out-of-domain values
    """

    tokens = [token.strip() for token in line.strip().split(",")]
    expected = len(schema) + 1
    if len(tokens) != expected:
        raise DataParseError(f"expected {expected} fields, found {len(tokens)}", line_number)

    label_token = tokens[-1]
    if label_token in ("", MISSING_TOKEN):
        raise DataParseError("severity label is missing", line_number)
    try:
        label = Severity(int(label_token))
    except ValueError:
        raise DataParseError(f"invalid severity label '{label_token}'", line_number) from None

    values = []
    coerced = []
    for index, (attr, token) in enumerate(zip(schema, tokens[:-1])):
        if token == MISSING_TOKEN:
            values.append(MISSING)
            continue
        try:
            number = float(token)
        except ValueError:
            raise DataParseError(
                f"non-numeric value '{token}' for attribute '{attr.name}'", line_number
            ) from None

        value: Cell
        if attr.is_categorical:
            value = int(number) if number.is_integer() else number
        else:
            value = number

        if not attr.contains(value):
            logger.debug(f"line {line_number}: {attr.name}={token} outside domain, coerced to MISSING")
            values.append(MISSING)
            coerced.append(index)
        else:
            values.append(value)

    return Record(values=tuple(values), label=label, coerced=tuple(coerced))


def format_value(value: Cell) -> str:
    if value is MISSING:
        return MISSING_TOKEN
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_record(record: Record) -> str:
    """Inverse of parse_record for valid records"""
    cells = [format_value(value) for value in record.values]
    cells.append(str(int(record.label)))
    return ",".join(cells)


def load_dataset(path: Union[str, Path],
                 schema: Sequence[AttributeSchema] = MAMMOGRAPHIC_SCHEMA) -> Dataset:
    """
    Load a UCI-format file

    Args:
        path: file with one record per non-empty line, no header
        schema: attribute declarations

    Returns:
        Dataset with records in file order
    """

    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")

    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            records.append(parse_record(line, schema, line_number))

    dataset = Dataset(tuple(schema), tuple(records))
    if not records:
        logger.warning(f"Dataset {path} is empty")
    else:
        coerced = sum(len(r.coerced) for r in records)
        logger.info(f"Loaded {len(records)} records from {path} ({coerced} out-of-domain cells coerced)")
    return dataset


def write_dataset(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write a dataset back in the UCI format"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [format_record(record) for record in dataset.records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    logger.info(f"Wrote {len(lines)} records to {path}")
    return path

