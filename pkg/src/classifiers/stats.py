"""
Contingency-table Statistics for CHAID
Likelihood-ratio G^2, chi-squared tail p-values and Bonferroni multipliers
"""

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy.special import gammaincc

from utils.errors import DegenerateTableError


@dataclass(frozen=True)
class ContingencyTable:
    """Observed counts n_ij: rows are predictor categories, columns are target classes"""
    observed: np.ndarray
    row_labels: Tuple = field(default=())
    col_labels: Tuple = field(default=())

    def __post_init__(self):
        observed = np.asarray(self.observed, dtype=float)
        if observed.ndim != 2:
            raise ValueError("contingency table must be two-dimensional")
        if np.any(observed < 0):
            raise ValueError("contingency table counts must be nonnegative")
        if observed.sum() <= 0:
            raise ValueError("contingency table is empty")
        object.__setattr__(self, "observed", observed)
        if not self.row_labels:
            object.__setattr__(self, "row_labels", tuple(range(observed.shape[0])))
        if not self.col_labels:
            object.__setattr__(self, "col_labels", tuple(range(observed.shape[1])))

    @property
    def expected(self) -> np.ndarray:
        rows = self.observed.sum(axis=1, keepdims=True)
        cols = self.observed.sum(axis=0, keepdims=True)
        return rows @ cols / self.observed.sum()

    @property
    def degrees_of_freedom(self) -> int:
        r, c = self.observed.shape
        return (r - 1) * (c - 1)

    def pruned(self) -> "ContingencyTable":
        """Drop all-zero rows and columns"""
        row_mask = self.observed.sum(axis=1) > 0
        col_mask = self.observed.sum(axis=0) > 0
        return ContingencyTable(
            self.observed[row_mask][:, col_mask],
            tuple(l for l, keep in zip(self.row_labels, row_mask) if keep),
            tuple(l for l, keep in zip(self.col_labels, col_mask) if keep),
        )


def g2_statistic(t: ContingencyTable) -> float:
    """
    Likelihood-ratio statistic G^2 = 2 * sum n_ij ln(n_ij / m_ij)

    Args:
        t: contingency table; zero rows and columns are removed first

    Returns:
        G^2 >= 0
    """
    table = t.pruned()
    if table.observed.shape[0] < 2 or table.observed.shape[1] < 2:
        raise DegenerateTableError(
            f"degenerate table: {table.observed.shape[0]} non-empty rows, "
            f"{table.observed.shape[1]} non-empty columns"
        )
    observed = table.observed
    expected = table.expected
    positive = observed > 0
    terms = observed[positive] * np.log(observed[positive] / expected[positive])
    # sorted exact sum: permuted tables give bit-identical statistics
    g2 = 2.0 * math.fsum(sorted(terms.tolist()))
    return max(g2, 0.0)


def chi2_pvalue(g2: float, d: int) -> float:
    """
    Upper tail Pr(chi2_d > g2), the regularized upper incomplete gamma Q(d/2, g2/2)

    Args:
        g2: statistic, nonnegative
        d: degrees of freedom, at least 1

    Returns:
        p-value in [0, 1]
    """
    if g2 < 0:
        raise ValueError(f"chi-squared statistic must be nonnegative, got {g2}")
    if d < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {d}")
    if g2 == 0:
        return 1.0
    return float(min(1.0, max(0.0, gammaincc(d / 2.0, g2 / 2.0))))


def table_pvalue(observed: Sequence[Sequence[float]]) -> Tuple[float, float, int]:
    """G^2, p-value and degrees of freedom of a table; a degenerate table is independence (p = 1)"""
    table = ContingencyTable(np.asarray(observed, dtype=float)).pruned()
    if table.observed.shape[0] < 2 or table.observed.shape[1] < 2:
        return 0.0, 1.0, 0
    g2 = g2_statistic(table)
    d = table.degrees_of_freedom
    return g2, chi2_pvalue(g2, d), d


def bonferroni_multiplier(c: int, r: int, kind: str) -> float:
    """
    Number of ways c categories can be reduced to r groups

    Args:
        c: original category count
        r: merged group count
        kind: "ordinal" (contiguous groups) or "nominal" (any grouping)

    Returns:
        multiplier B >= 1
    """
    if r < 1 or c < 1:
        raise ValueError(f"category counts must be positive (c={c}, r={r})")
    if r > c:
        raise ValueError(f"merged group count {r} exceeds category count {c}")
    if kind == "ordinal":
        return float(math.comb(c - 1, r - 1))
    if kind == "nominal":
        # sum_{i=0}^{r-1} (-1)^i (r-i)^c / (i! (r-i)!), kept in exact integer arithmetic
        total = sum((-1) ** i * math.comb(r, i) * (r - i) ** c for i in range(r))
        return float(total // math.factorial(r))
    raise ValueError(f"unknown attribute kind '{kind}'")
