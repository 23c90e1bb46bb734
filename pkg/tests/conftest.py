"""
Shared fixtures: src/ on the import path, toy datasets and the optional UCI file
"""

import logging
import os
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent
UCI_PATH = Path(os.getenv("MAMMO_DATA_PATH") or ROOT / "data" / "mammographic_masses.data").resolve()
sys.path.insert(0, str(ROOT / "src"))

from dataset.schema import MAMMOGRAPHIC_SCHEMA, MISSING, Dataset, Record, Severity  # noqa: E402

UCI_LINES = [
    "5,67,3,5,3,1",
    "4,43,1,1,?,1",
    "5,58,4,5,3,1",
    "4,28,1,1,3,0",
    "5,74,1,5,?,1",
    "4,65,1,?,3,0",
    "4,70,?,?,3,0",
    "5,42,1,?,3,0",
    "5,57,1,5,3,1",
    "5,60,?,5,1,1",
    "5,76,1,4,3,1",
    "3,42,2,1,3,1",
    "4,64,1,?,3,0",
    "4,36,3,1,2,0",
    "4,60,2,1,2,0",
    "4,54,1,1,3,0",
    "3,52,3,4,3,0",
    "4,59,2,1,3,1",
    "4,54,1,1,3,1",
    "4,40,1,?,?,0",
]


def make_record(values, label) -> Record:
    return Record(values=tuple(values), label=Severity(label))


def synthetic_records(size: int, seed: int = 0, noise: float = 0.1):
    """Separable-ish records: irregular spiculated masses in older patients lean malignant"""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(size):
        malignant = i % 2 == 1
        if rng.random() < noise:
            malignant = not malignant
        age = float(rng.integers(55, 86) if malignant else rng.integers(25, 61))
        shape = int(rng.choice([3, 4]) if malignant else rng.choice([1, 2]))
        margin = int(rng.choice([4, 5]) if malignant else rng.choice([1, 2, 3]))
        density = int(rng.choice([1, 2, 3, 4]))
        bi_rads = 5 if malignant else 3
        records.append(make_record([bi_rads, age, shape, margin, density], int(i % 2 == 1)))
    return records


@pytest.fixture
def schema():
    return MAMMOGRAPHIC_SCHEMA


@pytest.fixture
def uci_file(tmp_path) -> Path:
    path = tmp_path / "sample.data"
    path.write_text("\n".join(UCI_LINES) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def complete_dataset() -> Dataset:
    return Dataset(MAMMOGRAPHIC_SCHEMA, tuple(synthetic_records(120, seed=3)))


@pytest.fixture
def incomplete_dataset() -> Dataset:
    records = []
    for i, record in enumerate(synthetic_records(120, seed=5)):
        values = list(record.values)
        if i % 9 == 0:
            values[4] = MISSING
        if i % 13 == 0:
            values[2] = MISSING
        records.append(record.replace_values(tuple(values)))
    return Dataset(MAMMOGRAPHIC_SCHEMA, tuple(records))


@pytest.fixture
def uci_path() -> Path:
    if not UCI_PATH.exists():
        pytest.skip(f"UCI data file not available at {UCI_PATH}")
    return UCI_PATH.resolve()


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """Keep MAMMO_* settings, a local .env and root logger changes out of every test"""
    for name in ("MAMMO_DATA_PATH", "MAMMO_OUTPUT_DIR", "MAMMO_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    root = logging.getLogger()
    level, handlers = root.level, list(root.handlers)
    yield
    root.setLevel(level)
    root.handlers[:] = handlers
