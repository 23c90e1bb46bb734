"""
C&RT Trees for Missing Value Imputation
Binary classification/regression trees with Gini or variance splitting and majority-direction routing of missing predictors
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from dataset.schema import MISSING, AttributeKind, Cell, Dataset, Record
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

LABEL_PREDICTOR = "severity"
LABEL_INDEX = -1

_GAIN_EPS = 1e-12


@dataclass(frozen=True)
class CartParams:
    """Growth limits for imputation trees"""
    max_depth: int = 5
    min_leaf: int = 5
    min_impurity_decrease: float = 1e-7

    def __post_init__(self):
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.min_impurity_decrease < 0:
            raise ConfigError(f"min_impurity_decrease must be >= 0, got {self.min_impurity_decrease}")


@dataclass
class CartNode:
    """Tree node; a leaf when left/right are None"""
    prediction: Cell
    count: int
    impurity: float
    depth: int = 0
    predictor: Optional[int] = None  # position in CartTree.predictors
    threshold: Optional[float] = None
    left_codes: Optional[Tuple[int, ...]] = None
    majority_left: bool = True
    gain: float = 0.0
    left: Optional["CartNode"] = None
    right: Optional["CartNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def goes_left(self, value: Cell) -> bool:
        if value is MISSING:
            return self.majority_left
        if self.threshold is not None:
            return value <= self.threshold
        return value in self.left_codes

    def describe(self, names: Sequence[str]) -> str:
        name = names[self.predictor]
        if self.threshold is not None:
            return f"{name} <= {self.threshold:g}"
        return f"{name} in {{{', '.join(str(c) for c in self.left_codes)}}}"


@dataclass
class CartTree:
    """Imputation tree for one target attribute"""
    target: str
    target_kind: AttributeKind
    predictors: Tuple[str, ...]
    predictor_indices: Tuple[int, ...]  # schema index, or LABEL_INDEX for the severity label
    root: CartNode

    def depth(self) -> int:
        def walk(node: CartNode) -> int:
            return node.depth if node.is_leaf else max(walk(node.left), walk(node.right))
        return walk(self.root)

    def node_count(self) -> int:
        def walk(node: CartNode) -> int:
            return 1 if node.is_leaf else 1 + walk(node.left) + walk(node.right)
        return walk(self.root)

    def leaves(self) -> List[CartNode]:
        found = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                found.append(node)
            else:
                stack.extend([node.right, node.left])
        return found

    def render(self) -> str:
        lines = []

        def walk(node: CartNode, indent: str, prefix: str):
            if node.is_leaf:
                lines.append(f"{indent}{prefix}predict {node.prediction!r} (n={node.count})")
                return
            lines.append(f"{indent}{prefix}{node.describe(self.predictors)} "
                         f"[gain={node.gain:.4f}, n={node.count}, missing->"
                         f"{'left' if node.majority_left else 'right'}]")
            walk(node.left, indent + "  ", "yes: ")
            walk(node.right, indent + "  ", "no:  ")

        walk(self.root, "", "")
        return "\n".join(lines)


def gini_impurity(counts: Sequence[float]) -> float:
    """
    Gini impurity 1 - sum(p_k^2) of a class-count vector

    Args:
        counts: nonnegative per-class counts with a positive total

    Returns:
        impurity in [0, 1 - 1/K]
    """
    values = np.asarray(counts, dtype=float)
    if np.any(values < 0):
        raise ValueError("class counts must be nonnegative")
    total = values.sum()
    if total <= 0:
        raise ValueError("gini impurity of an empty node is undefined")
    p = values / total
    return float(1.0 - np.sum(p * p))


def _predictor_value(record: Record, index: int) -> Cell:
    return int(record.label) if index == LABEL_INDEX else record.values[index]


class _Criterion:
    """Impurity and leaf value for one target kind"""

    def __init__(self, kind: AttributeKind, categories: Tuple[int, ...]):
        self.categorical = kind != AttributeKind.CONTINUOUS
        self.categories = categories

    def prepare(self, targets: List[Cell]) -> np.ndarray:
        if self.categorical:
            lookup = {code: i for i, code in enumerate(self.categories)}
            return np.asarray([lookup[t] for t in targets], dtype=int)
        return np.asarray(targets, dtype=float)

    def impurity(self, y: np.ndarray) -> float:
        if self.categorical:
            return gini_impurity(np.bincount(y, minlength=len(self.categories)))
        return float(np.var(y))

    def leaf_value(self, y: np.ndarray) -> Cell:
        if self.categorical:
            counts = np.bincount(y, minlength=len(self.categories))
            return self.categories[int(np.argmax(counts))]
        return float(np.mean(y))


def _candidate_splits(column: List[Cell], kind: AttributeKind):
    """Yield (threshold, left_codes) candidates in tie-break order"""
    present = sorted({v for v in column if v is not MISSING})
    if len(present) < 2:
        return
    if kind == AttributeKind.CONTINUOUS:
        for low, high in zip(present[:-1], present[1:]):
            yield (low + high) / 2.0, None
    elif kind == AttributeKind.ORDINAL:
        for size in range(1, len(present)):
            yield None, tuple(present[:size])
    else:
        first, rest = present[0], present[1:]
        subsets = []
        for size in range(0, len(rest)):
            for combo in itertools.combinations(rest, size):
                subsets.append((first,) + combo)
        for subset in sorted(subsets):
            yield None, subset


def train_cart(ds: Dataset, target: str, params: CartParams = None,
               include_label: bool = False) -> CartTree:
    """
    Fit an imputation tree for one attribute

    Args:
        ds: dataset, possibly with MISSING cells
        target: attribute to predict
        params: growth limits
        include_label: also use the severity label as a predictor

    Returns:
        CartTree trained on the records where the target is present
    """

    params = params or CartParams()
    target_index = ds.attribute_index(target)
    target_attr = ds.schema[target_index]

    predictor_indices = [i for i, a in enumerate(ds.schema) if i != target_index and a.predictive]
    predictor_kinds = [ds.schema[i].kind for i in predictor_indices]
    predictor_names = [ds.schema[i].name for i in predictor_indices]
    if include_label:
        predictor_indices.append(LABEL_INDEX)
        predictor_kinds.append(AttributeKind.NOMINAL)
        predictor_names.append(LABEL_PREDICTOR)

    training = [r for r in ds.records if r.values[target_index] is not MISSING]
    if not training:
        raise ValueError(f"cannot train an imputation tree for '{target}': no observed values")

    criterion = _Criterion(target_attr.kind, target_attr.categories)
    y = criterion.prepare([r.values[target_index] for r in training])
    columns = [[_predictor_value(r, p) for r in training] for p in predictor_indices]

    def grow(rows: np.ndarray, depth: int) -> CartNode:
        y_node = y[rows]
        node = CartNode(
            prediction=criterion.leaf_value(y_node),
            count=len(rows),
            impurity=criterion.impurity(y_node),
            depth=depth,
        )
        if depth >= params.max_depth or node.impurity <= 0.0 or len(rows) < 2 * params.min_leaf:
            return node

        best = None
        best_gain = -np.inf
        n = len(rows)
        for p, kind in enumerate(predictor_kinds):
            column = [columns[p][i] for i in rows]
            missing = np.array([v is MISSING for v in column])
            for threshold, left_codes in _candidate_splits(column, kind):
                if threshold is not None:
                    goes_left = np.array([v is not MISSING and v <= threshold for v in column])
                else:
                    goes_left = np.array([v is not MISSING and v in left_codes for v in column])
                n_left_present = int(goes_left.sum())
                n_right_present = int((~goes_left & ~missing).sum())
                majority_left = n_left_present >= n_right_present
                if majority_left:
                    goes_left = goes_left | missing
                left_count = int(goes_left.sum())
                right_count = n - left_count
                if left_count < params.min_leaf or right_count < params.min_leaf:
                    continue
                gain = node.impurity \
                    - left_count / n * criterion.impurity(y_node[goes_left]) \
                    - right_count / n * criterion.impurity(y_node[~goes_left])
                if gain > best_gain + _GAIN_EPS:
                    best_gain = gain
                    best = (p, threshold, left_codes, majority_left, goes_left)

        if best is None or best_gain <= 0.0 or best_gain < params.min_impurity_decrease:
            return node

        p, threshold, left_codes, majority_left, goes_left = best
        node.predictor = p
        node.threshold = threshold
        node.left_codes = left_codes
        node.majority_left = majority_left
        node.gain = float(best_gain)
        node.left = grow(rows[goes_left], depth + 1)
        node.right = grow(rows[~goes_left], depth + 1)
        return node

    root = grow(np.arange(len(training)), 0)
    tree = CartTree(
        target=target,
        target_kind=target_attr.kind,
        predictors=tuple(predictor_names),
        predictor_indices=tuple(predictor_indices),
        root=root,
    )
    logger.debug(f"C&RT for '{target}': {tree.node_count()} nodes, depth {tree.depth()}, "
                 f"trained on {len(training)} records")
    return tree


def cart_predict(tree: CartTree, rec: Record) -> Cell:
    """Route a record to its leaf; MISSING predictors follow the node's majority direction"""
    node = tree.root
    while not node.is_leaf:
        value = _predictor_value(rec, tree.predictor_indices[node.predictor])
        node = node.left if node.goes_left(value) else node.right
    return node.prediction


def tree_summary(tree: CartTree) -> Dict[str, Any]:
    return {
        "target": tree.target,
        "predictors": list(tree.predictors),
        "depth": tree.depth(),
        "nodes": tree.node_count(),
        "root_gain": tree.root.gain,
    }
