"""
Train/Test Partition
Seeded, optionally stratified split with largest-remainder rounding of the per-class sizes
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from dataset.schema import Dataset
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionSpec:
    """70/30 stratified by default"""
    train_fraction: float = 0.7
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def class_allocation(class_sizes: Dict[int, int], fraction: float) -> Dict[int, int]:
    """
    Per-class training counts summing to round(n * fraction)

    Args:
        class_sizes: records per class
        fraction: training fraction

    Returns:
        training count per class; leftover units go to the largest fractional remainders,
        ties to the smaller class code
    """
    total = sum(class_sizes.values())
    target = _round_half_up(total * fraction)
    exact = {c: size * fraction for c, size in class_sizes.items()}
    allocation = {c: int(math.floor(v)) for c, v in exact.items()}
    leftover = target - sum(allocation.values())
    by_remainder = sorted(exact, key=lambda c: (-(exact[c] - allocation[c]), c))
    for c in by_remainder[:max(0, leftover)]:
        allocation[c] += 1
    return allocation


def split_indices(labels: Sequence[int], spec: PartitionSpec) -> Tuple[List[int], List[int]]:
    """
    Partition record positions

    Args:
        labels: class label per record
        spec: fraction, stratification flag and seed

    Returns:
        (train positions, test positions), each in ascending order
    """
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    if n == 0:
        raise ValueError("cannot partition an empty dataset")

    rng = np.random.default_rng(spec.seed)
    train: List[int] = []
    if spec.stratified:
        classes = sorted(int(c) for c in np.unique(labels))
        sizes = {c: int(np.sum(labels == c)) for c in classes}
        small = [c for c, size in sizes.items() if size < 2]
        if small:
            raise ValueError(f"stratified split needs at least 2 records per class; classes {small} have fewer")
        allocation = class_allocation(sizes, spec.train_fraction)
        for c in classes:
            members = np.flatnonzero(labels == c)
            chosen = rng.permutation(members)[:allocation[c]]
            train.extend(int(i) for i in chosen)
    else:
        size = _round_half_up(n * spec.train_fraction)
        train = [int(i) for i in rng.permutation(n)[:size]]

    train_set = set(train)
    test = [i for i in range(n) if i not in train_set]
    if not train or not test:
        raise ValueError(f"train_fraction {spec.train_fraction} leaves one side of a {n}-record split empty")
    return sorted(train), test


def split(ds: Dataset, spec: PartitionSpec) -> Tuple[Dataset, Dataset]:
    """
    Split a dataset into training and test sides

    Args:
        ds: non-empty dataset
        spec: partition settings

    Returns:
        (train, test); together they hold every record exactly once, each in original order
    """
    train_idx, test_idx = split_indices(ds.labels(), spec)
    logger.debug(f"Partition seed {spec.seed}: {len(train_idx)} train / {len(test_idx)} test")
    return ds.subset(train_idx), ds.subset(test_idx)
