"""
CHAID Decision Tree
Bins continuous attributes, merges homogeneous categories, splits on the smallest Bonferroni-adjusted p-value
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from classifiers.stats import bonferroni_multiplier, table_pvalue
from dataset.schema import MISSING, AttributeKind, Dataset, Record, Severity
from utils.errors import ConfigError, MissingValueError, ModelFormatError

logger = logging.getLogger(__name__)

_TIE_RTOL = 1e-9

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ChaidParams:
    """CHAID growth parameters; min_parent/min_child default to 2% / 1% of the training records"""
    alpha_merge: float = 0.1
    alpha_split: float = 0.1
    max_depth: int = 5
    min_parent: Optional[int] = None
    min_child: Optional[int] = None
    bin_count: int = 10

    def __post_init__(self):
        if not 0 < self.alpha_merge <= 1:
            raise ConfigError(f"alpha_merge must be in (0, 1], got {self.alpha_merge}")
        if not 0 < self.alpha_split <= 1:
            raise ConfigError(f"alpha_split must be in (0, 1], got {self.alpha_split}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_child is not None and self.min_child < 1:
            raise ConfigError(f"min_child must be >= 1, got {self.min_child}")
        if self.min_parent is not None and self.min_parent < 1:
            raise ConfigError(f"min_parent must be >= 1, got {self.min_parent}")
        if self.bin_count < 2:
            raise ConfigError(f"bin_count must be >= 2, got {self.bin_count}")

    def resolved_sizes(self, n_train: int) -> Tuple[int, int]:
        min_parent = self.min_parent if self.min_parent is not None else max(2, math.ceil(0.02 * n_train))
        min_child = self.min_child if self.min_child is not None else max(2, math.ceil(0.01 * n_train))
        return min_parent, min_child


@dataclass(frozen=True)
class BinAssignment:
    """Per-value bin indices and the upper edges of all bins but the last"""
    indices: np.ndarray
    boundaries: Tuple[float, ...]

    @property
    def bin_count(self) -> int:
        return len(self.boundaries) + 1


def bin_continuous(values: Sequence[float], bin_count: int) -> BinAssignment:
    """
    Equal-frequency binning

    Args:
        values: real values
        bin_count: requested number of bins

    Returns:
        BinAssignment; a value equal to a boundary falls in the lower bin
    """
    array = np.asarray(list(values), dtype=float)
    if array.size == 0:
        raise ValueError("cannot bin an empty value list")
    if bin_count < 1:
        raise ValueError(f"bin_count must be positive, got {bin_count}")

    distinct = np.unique(array)
    if len(distinct) <= bin_count:
        boundaries = tuple(float(v) for v in distinct[:-1])
    else:
        ordered = np.sort(array)
        n = len(ordered)
        edges = []
        for k in range(1, bin_count):
            edge = float(ordered[-(-k * n // bin_count) - 1])
            if edge < ordered[-1] and (not edges or edge > edges[-1]):
                edges.append(edge)
        boundaries = tuple(edges)

    indices = np.searchsorted(np.asarray(boundaries, dtype=float), array, side="left")
    return BinAssignment(indices=indices.astype(int), boundaries=boundaries)


@dataclass(frozen=True)
class ChaidPredictor:
    """A categorical view of one schema attribute"""
    name: str
    schema_index: int
    kind: str  # "ordinal" or "nominal"
    codes: Tuple[int, ...]
    boundaries: Optional[Tuple[float, ...]] = None

    def code_of(self, value) -> int:
        if self.boundaries is not None:
            return int(np.searchsorted(np.asarray(self.boundaries, dtype=float), float(value), side="left"))
        return int(value)


def merge_categories(category_counts: Mapping[int, Sequence[float]], kind: str,
                     alpha_merge: float) -> List[Tuple[int, ...]]:
    """
    Merge statistically homogeneous categories

    Args:
        category_counts: per-category class counts at the node
        kind: "ordinal" (only adjacent groups merge) or "nominal" (any pair merges)
        alpha_merge: pairs whose p-value exceeds this are merged

    Returns:
        merged groups of category codes
    """
    codes = sorted(c for c, counts in category_counts.items() if sum(counts) > 0)
    groups = [(c,) for c in codes]
    counts = [np.asarray(category_counts[c], dtype=float) for c in codes]

    while len(groups) >= 2:
        # candidate pairs: neighbours only for ordinal predictors
        if kind == "ordinal":
            pairs = [(i, i + 1) for i in range(len(groups) - 1)]
        else:
            pairs = [(i, j) for i in range(len(groups)) for j in range(i + 1, len(groups))]

        # most similar pair, first one wins on ties
        best_pair = None
        best_p = -1.0
        for i, j in pairs:
            _, p, _ = table_pvalue([counts[i], counts[j]])
            if p > best_p:
                best_p = p
                best_pair = (i, j)

        if best_p <= alpha_merge:
            break
        # fold j into i
        i, j = best_pair
        groups[i] = tuple(sorted(groups[i] + groups[j]))
        counts[i] = counts[i] + counts[j]
        del groups[j]
        del counts[j]

    return groups


@dataclass
class SplitResult:
    """Best split found at a node"""
    position: int
    groups: List[Tuple[int, ...]]
    group_counts: List[int]
    g2: float
    p_value: float
    adjusted_p: float


def _evaluate_predictor(column: np.ndarray, labels: np.ndarray, predictor: ChaidPredictor,
                        params: ChaidParams, position: int) -> Optional[SplitResult]:
    present = np.unique(column)
    if len(present) < 2:
        return None
    category_counts = {
        int(code): [int(np.sum((column == code) & (labels == 0))), int(np.sum((column == code) & (labels == 1)))]
        for code in present
    }
    groups = merge_categories(category_counts, predictor.kind, params.alpha_merge)
    if len(groups) < 2:
        return None

    table = [np.sum([category_counts[c] for c in group], axis=0) for group in groups]
    g2, p_value, _ = table_pvalue(table)
    multiplier = bonferroni_multiplier(len(present), len(groups), predictor.kind)
    return SplitResult(
        position=position,
        groups=groups,
        group_counts=[int(np.sum(np.isin(column, group))) for group in groups],
        g2=g2,
        p_value=p_value,
        adjusted_p=min(1.0, p_value * multiplier),
    )


def select_split(codes: np.ndarray, labels: np.ndarray, predictors: Sequence[ChaidPredictor],
                 params: ChaidParams, min_child: int = 1) -> Optional[SplitResult]:
    """
    Choose the predictor with the smallest adjusted p-value

    Args:
        codes: node records as an (n, predictors) matrix of category codes
        labels: class labels 0/1 of the node records
        predictors: candidate predictors, one per column of codes
        params: CHAID parameters (alpha_merge, alpha_split)
        min_child: smallest allowed child size

    Returns:
        SplitResult, or None when the best split is not significant or leaves a child too small
    """
    best = None
    for position, predictor in enumerate(predictors):
        result = _evaluate_predictor(codes[:, position], labels, predictor, params, position)
        if result is None:
            continue
        # ties within rounding keep the lower attribute index
        if best is None or result.adjusted_p < best.adjusted_p * (1.0 - _TIE_RTOL):
            best = result

    if best is None or best.adjusted_p > params.alpha_split:
        return None
    if min(best.group_counts) < min_child:
        return None
    return best


@dataclass
class ChaidNode:
    """Decision node when children are present, leaf otherwise"""
    node_id: int
    depth: int
    class_counts: Tuple[int, int]
    predictor: Optional[str] = None
    position: Optional[int] = None
    groups: List[Tuple[int, ...]] = field(default_factory=list)
    group_counts: List[int] = field(default_factory=list)
    g2: Optional[float] = None
    p_value: Optional[float] = None
    adjusted_p: Optional[float] = None
    children: List["ChaidNode"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def total(self) -> int:
        return int(sum(self.class_counts))

    @property
    def majority_class(self) -> Severity:
        benign, malignant = self.class_counts
        return Severity.MALIGNANT if malignant > benign else Severity.BENIGN

    @property
    def score(self) -> float:
        return self.class_counts[1] / self.total if self.total else 0.0

    def child_for(self, code: int) -> "ChaidNode":
        for group, child in zip(self.groups, self.children):
            if code in group:
                return child
        # unseen category at this node
        return self.children[int(np.argmax(self.group_counts))]

    def to_dict(self) -> Dict[str, Any]:
        payload = {
            "node_id": self.node_id,
            "depth": self.depth,
            "class_counts": list(self.class_counts),
        }
        if not self.is_leaf:
            payload.update({
                "predictor": self.predictor,
                "position": self.position,
                "groups": [list(g) for g in self.groups],
                "group_counts": list(self.group_counts),
                "g2": self.g2,
                "p_value": self.p_value,
                "adjusted_p": self.adjusted_p,
                "children": [child.to_dict() for child in self.children],
            })
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ChaidNode":
        return cls(
            node_id=payload["node_id"],
            depth=payload["depth"],
            class_counts=tuple(payload["class_counts"]),
            predictor=payload.get("predictor"),
            position=payload.get("position"),
            groups=[tuple(g) for g in payload.get("groups", [])],
            group_counts=list(payload.get("group_counts", [])),
            g2=payload.get("g2"),
            p_value=payload.get("p_value"),
            adjusted_p=payload.get("adjusted_p"),
            children=[cls.from_dict(c) for c in payload.get("children", [])],
        )


@dataclass
class ChaidTree:
    """Trained CHAID model"""
    root: ChaidNode
    params: ChaidParams
    predictors: List[ChaidPredictor]
    min_parent: int
    min_child: int
    n_train: int

    def nodes(self) -> List[ChaidNode]:
        found = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            found.append(node)
            stack.extend(reversed(node.children))
        return found

    def leaves(self) -> List[ChaidNode]:
        return [n for n in self.nodes() if n.is_leaf]

    def decision_nodes(self) -> List[ChaidNode]:
        return [n for n in self.nodes() if not n.is_leaf]

    def depth(self) -> int:
        return max(n.depth for n in self.nodes())

    def node_count(self) -> int:
        return len(self.nodes())

    def summary(self) -> Dict[str, Any]:
        return {"depth": self.depth(), "nodes": self.node_count(), "leaves": len(self.leaves()),
                "min_parent": self.min_parent, "min_child": self.min_child, "n_train": self.n_train}

    def codes_for(self, rec: Record) -> List[int]:
        codes = []
        for predictor in self.predictors:
            value = rec.values[predictor.schema_index]
            if value is MISSING:
                raise MissingValueError(-1, predictor.name)
            codes.append(predictor.code_of(value))
        return codes

    def predict_scores(self, ds: Dataset) -> Tuple[np.ndarray, np.ndarray]:
        """Predicted classes and malignant-proportion scores for every record"""
        classes = np.zeros(len(ds), dtype=int)
        scores = np.zeros(len(ds), dtype=float)
        for i, record in enumerate(ds.records):
            try:
                label, score = chaid_predict(self, record)
            except MissingValueError as e:
                raise MissingValueError(i, e.attribute) from None
            classes[i] = int(label)
            scores[i] = score
        return classes, scores

    def render(self) -> str:
        """Indented text rendering, one node per line"""
        lines = []

        def walk(node: ChaidNode, indent: str, branch: str):
            benign, malignant = node.class_counts
            head = (f"{indent}{branch}[node {node.node_id}] n={node.total} benign={benign} "
                    f"malignant={malignant} score={node.score:.3f}")
            if node.is_leaf:
                lines.append(f"{head} -> {node.majority_class.name.lower()}")
                return
            lines.append(f"{head} | split on {node.predictor} (adj. p={node.adjusted_p:.3g}, G2={node.g2:.2f})")
            predictor = self.predictors[node.position]
            for group, child in zip(node.groups, node.children):
                walk(child, indent + "  ", f"{predictor.name} in {self._group_text(predictor, group)}: ")

        walk(self.root, "", "")
        return "\n".join(lines)

    @staticmethod
    def _group_text(predictor: ChaidPredictor, group: Tuple[int, ...]) -> str:
        if predictor.boundaries is None:
            return "{" + ", ".join(str(c) for c in group) + "}"
        edges = [-math.inf] + list(predictor.boundaries) + [math.inf]
        low, high = edges[min(group)], edges[max(group) + 1]
        return f"({low:g}, {high:g}]"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "params": asdict(self.params),
            "predictors": [
                {**asdict(p), "codes": list(p.codes),
                 "boundaries": list(p.boundaries) if p.boundaries is not None else None}
                for p in self.predictors
            ],
            "min_parent": self.min_parent,
            "min_child": self.min_child,
            "n_train": self.n_train,
            "root": self.root.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ChaidTree":
        if payload.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported CHAID format version {payload.get('format_version')}")
        predictors = [
            ChaidPredictor(
                name=p["name"],
                schema_index=p["schema_index"],
                kind=p["kind"],
                codes=tuple(p["codes"]),
                boundaries=tuple(p["boundaries"]) if p["boundaries"] is not None else None,
            )
            for p in payload["predictors"]
        ]
        return cls(
            root=ChaidNode.from_dict(payload["root"]),
            params=ChaidParams(**payload["params"]),
            predictors=predictors,
            min_parent=payload["min_parent"],
            min_child=payload["min_child"],
            n_train=payload["n_train"],
        )


def _build_predictors(train: Dataset, params: ChaidParams,
                      include_non_predictive: bool) -> Tuple[List[ChaidPredictor], np.ndarray]:
    predictors = []
    columns = []
    for index, attr in enumerate(train.schema):
        if not (attr.predictive or include_non_predictive):
            continue
        column = train.column(index)
        if attr.kind == AttributeKind.CONTINUOUS:
            binned = bin_continuous(column, params.bin_count)
            predictors.append(ChaidPredictor(attr.name, index, "ordinal",
                                             tuple(range(binned.bin_count)), binned.boundaries))
            columns.append(binned.indices)
        else:
            predictors.append(ChaidPredictor(attr.name, index, attr.kind.value, tuple(attr.categories)))
            columns.append(np.asarray(column, dtype=int))
    codes = np.column_stack(columns) if columns else np.zeros((len(train), 0), dtype=int)
    return predictors, codes


def grow_tree(train: Dataset, params: ChaidParams = None,
              include_non_predictive: bool = False) -> ChaidTree:
    """
    Grow a CHAID tree

    Args:
        train: complete training dataset
        params: CHAID parameters
        include_non_predictive: also offer non-predictive attributes (BI-RADS) as split candidates

    Returns:
        ChaidTree
    """
    params = params or ChaidParams()
    if len(train) == 0:
        raise ValueError("cannot grow a CHAID tree on an empty training set")
    for r, record in enumerate(train.records):
        for attr, value in zip(train.schema, record.values):
            if value is MISSING:
                raise MissingValueError(r, attr.name)

    min_parent, min_child = params.resolved_sizes(len(train))
    predictors, codes = _build_predictors(train, params, include_non_predictive)
    labels = np.asarray(train.labels(), dtype=int)
    next_id = [0]

    def grow(rows: np.ndarray, depth: int) -> ChaidNode:
        node_labels = labels[rows]
        node = ChaidNode(
            node_id=next_id[0],
            depth=depth,
            class_counts=(int(np.sum(node_labels == 0)), int(np.sum(node_labels == 1))),
        )
        next_id[0] += 1

        if depth >= params.max_depth or min(node.class_counts) == 0 or len(rows) < min_parent:
            return node
        split = select_split(codes[rows], node_labels, predictors, params, min_child)
        if split is None:
            return node

        node.predictor = predictors[split.position].name
        node.position = split.position
        node.groups = split.groups
        node.group_counts = split.group_counts
        node.g2 = split.g2
        node.p_value = split.p_value
        node.adjusted_p = split.adjusted_p
        column = codes[rows, split.position]
        for group in split.groups:
            node.children.append(grow(rows[np.isin(column, group)], depth + 1))
        return node

    root = grow(np.arange(len(train)), 0)
    tree = ChaidTree(root=root, params=params, predictors=predictors,
                     min_parent=min_parent, min_child=min_child, n_train=len(train))
    logger.info(f"CHAID tree grown: depth {tree.depth()}, {tree.node_count()} nodes, "
                f"{len(tree.leaves())} leaves")
    return tree


def chaid_predict(tree: ChaidTree, rec: Record) -> Tuple[Severity, float]:
    """
    Route a record to a leaf

    Args:
        tree: trained CHAID tree
        rec: record without MISSING predictor cells

    Returns:
        (majority class of the leaf, malignant proportion of the leaf)
    """
    codes = tree.codes_for(rec)
    node = tree.root
    while not node.is_leaf:
        node = node.child_for(codes[node.position])
    return node.majority_class, node.score
