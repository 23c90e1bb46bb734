"""
Tests for G^2, chi-squared tail probabilities and Bonferroni multipliers
"""

import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from classifiers.stats import (
    ContingencyTable,
    bonferroni_multiplier,
    chi2_pvalue,
    g2_statistic,
    table_pvalue,
)
from utils.errors import DegenerateTableError


def _chi2_tail_by_quadrature(x: float, d: int) -> float:
    k = d / 2.0
    density = lambda t: t ** (k - 1) * math.exp(-t / 2) / (2 ** k * math.gamma(k))
    head, _ = integrate.quad(density, 0, x)
    return 1.0 - head


def _groupings(c: int):
    """Every partition of range(c) into non-empty groups"""
    if c == 0:
        yield []
        return
    for rest in _groupings(c - 1):
        for i in range(len(rest)):
            yield rest[:i] + [rest[i] + [c - 1]] + rest[i + 1:]
        yield rest + [[c - 1]]


class TestG2:

    def test_hand_value(self):
        assert g2_statistic(ContingencyTable([[20, 10], [10, 20]])) == pytest.approx(6.796, abs=1e-3)

    def test_independent_table(self):
        assert g2_statistic(ContingencyTable([[10, 20], [5, 10]])) == pytest.approx(0.0, abs=1e-12)

    def test_zero_rows_dropped(self):
        with_zero = g2_statistic(ContingencyTable([[20, 10], [0, 0], [10, 20]]))
        assert with_zero == pytest.approx(g2_statistic(ContingencyTable([[20, 10], [10, 20]])))

    def test_single_row_is_degenerate(self):
        with pytest.raises(DegenerateTableError):
            g2_statistic(ContingencyTable([[5, 5], [0, 0]]))

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ContingencyTable([[1, -1], [2, 2]])

    def test_nonnegative_on_random_tables(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            table = rng.integers(1, 30, size=(rng.integers(2, 5), 2))
            assert g2_statistic(ContingencyTable(table)) >= 0.0


class TestChi2Pvalue:

    def test_five_percent_point(self):
        assert chi2_pvalue(3.841, 1) == pytest.approx(0.05, abs=1e-3)

    def test_hand_table_pvalue(self):
        assert chi2_pvalue(6.796, 1) == pytest.approx(0.00914, abs=1e-4)

    @pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
    def test_zero_statistic(self, d):
        assert chi2_pvalue(0.0, d) == 1.0

    @pytest.mark.parametrize("x,d", [(0.5, 1), (2.0, 2), (4.2, 3), (7.5, 4), (12.0, 6)])
    def test_matches_quadrature(self, x, d):
        assert chi2_pvalue(x, d) == pytest.approx(_chi2_tail_by_quadrature(x, d), abs=1e-6)

    def test_decreasing_in_statistic(self):
        values = [chi2_pvalue(x, 3) for x in np.linspace(0.1, 20, 50)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            chi2_pvalue(-1.0, 1)
        with pytest.raises(ValueError):
            chi2_pvalue(1.0, 0)

    def test_degenerate_table_counts_as_independent(self):
        assert table_pvalue([[5, 5], [0, 0]]) == (0.0, 1.0, 0)


class TestBonferroni:

    def test_ordinal_binomial(self):
        assert bonferroni_multiplier(4, 2, "ordinal") == 3

    def test_nominal_stirling(self):
        assert bonferroni_multiplier(4, 2, "nominal") == 7
        assert bonferroni_multiplier(5, 3, "nominal") == 25

    @pytest.mark.parametrize("kind", ["ordinal", "nominal"])
    def test_no_reduction(self, kind):
        for c in range(1, 7):
            assert bonferroni_multiplier(c, c, kind) == 1

    @pytest.mark.parametrize("c", [2, 3, 4, 5, 6])
    def test_nominal_matches_enumeration(self, c):
        counts = {}
        for grouping in _groupings(c):
            counts[len(grouping)] = counts.get(len(grouping), 0) + 1
        for r, expected in counts.items():
            assert bonferroni_multiplier(c, r, "nominal") == expected

    @pytest.mark.parametrize("c", [2, 3, 4, 5, 6])
    def test_ordinal_matches_enumeration(self, c):
        for r in range(1, c + 1):
            cuts = list(itertools.combinations(range(1, c), r - 1))
            assert bonferroni_multiplier(c, r, "ordinal") == len(cuts)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            bonferroni_multiplier(3, 4, "ordinal")
        with pytest.raises(ValueError):
            bonferroni_multiplier(3, 2, "interval")
