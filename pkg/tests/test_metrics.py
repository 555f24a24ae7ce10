"""Metric fixtures and properties; rank statistics against independent oracles."""

import math

import mpmath
import numpy as np
import pytest
import scipy.stats
from hypothesis import given
from hypothesis import strategies as st

from fairgrid import metrics as M
from fairgrid.metrics import MetricKind


class TestAccuracy:
    def test_perfect(self):
        assert M.accuracy([1, 0, 1], [1, 0, 1]) == 1.0
        assert M.zero_one_loss([1, 0, 1], [1, 0, 1]) == 0.0

    def test_half(self):
        assert M.accuracy([1, 1, 0, 0], [1, 0, 0, 1]) == 0.5
        assert M.zero_one_loss([1, 1, 0, 0], [1, 0, 0, 1]) == 0.5

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            M.accuracy([], [])

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40))
    def test_complement_exact(self, pairs):
        y = [a for a, _ in pairs]
        pred = [b for _, b in pairs]
        assert M.accuracy(y, pred) + M.zero_one_loss(y, pred) == 1.0


def _mask(privileged, unprivileged):
    return np.array([True] * privileged + [False] * unprivileged)


class TestStatisticalParity:
    def test_fixture(self):
        # privileged rate 3/4, unprivileged rate 1/4
        pred = [1, 1, 1, 0, 1, 0, 0, 0]
        assert M.statistical_parity(pred, _mask(4, 4)) == pytest.approx(-0.5)

    def test_equal_rates(self):
        assert M.statistical_parity([1, 0, 1, 0], _mask(2, 2)) == 0.0

    def test_all_positive(self):
        assert M.statistical_parity([1, 1, 1], np.array([True, False, False])) == 0.0

    def test_empty_group_errors(self):
        with pytest.raises(ValueError):
            M.statistical_parity([1, 0], np.array([True, True]))

    @given(st.lists(st.tuples(st.integers(0, 1), st.booleans()), min_size=2, max_size=40))
    def test_antisymmetric_under_mask_swap(self, rows):
        pred = [p for p, _ in rows]
        mask = np.array([m for _, m in rows])
        if mask.all() or not mask.any():
            return
        assert M.statistical_parity(pred, mask) == pytest.approx(
            -M.statistical_parity(pred, ~mask), abs=1e-12
        )


class TestDisparateImpact:
    def test_fixture(self):
        pred = [1, 1, 1, 0, 1, 0, 0, 0]
        assert M.disparate_impact(pred, _mask(4, 4)) == pytest.approx(1 / 3)

    def test_equal_rates(self):
        assert M.disparate_impact([1, 0, 1, 0], _mask(2, 2)) == 1.0

    def test_both_zero_is_parity(self):
        assert M.disparate_impact([0, 0, 0, 0], _mask(2, 2)) == 1.0

    def test_zero_denominator_is_undefined(self):
        assert M.is_undefined(M.disparate_impact([0, 0, 1, 1], _mask(2, 2)))

    def test_reciprocal_under_mask_swap(self):
        pred = [1, 1, 1, 0, 1, 0, 0, 0]
        di = M.disparate_impact(pred, _mask(4, 4))
        assert M.disparate_impact(pred, ~_mask(4, 4)) == pytest.approx(1 / di)


class TestOddsMetrics:
    def test_fixture(self):
        # privileged: TPR=1, FPR=0; unprivileged: TPR=0.5, FPR=0
        y = [1, 1, 0, 0, 1, 1, 0, 0]
        pred = [1, 1, 0, 0, 1, 0, 0, 0]
        mask = _mask(4, 4)
        assert M.average_odds(y, pred, mask) == pytest.approx(-0.25)
        assert M.equal_opportunity(y, pred, mask) == pytest.approx(-0.5)

    def test_identical_confusions(self):
        y = [1, 0, 1, 0]
        pred = [1, 1, 1, 1]
        assert M.average_odds(y, pred, _mask(2, 2)) == 0.0
        assert M.equal_opportunity(y, pred, _mask(2, 2)) == 0.0

    def test_no_actual_positives_is_undefined(self):
        y = [1, 0, 0, 0]
        pred = [1, 0, 1, 0]
        assert M.is_undefined(M.equal_opportunity(y, pred, _mask(2, 2)))
        assert M.is_undefined(M.average_odds(y, pred, _mask(2, 2)))


class TestRegressionMetrics:
    def test_perfect(self):
        assert M.mean_absolute_error([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert M.mean_squared_error([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_fixture(self):
        assert M.mean_absolute_error([0, 0], [1, 3]) == pytest.approx(2.0)
        assert M.mean_squared_error([0, 0], [1, 3]) == pytest.approx(5.0)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            M.mean_absolute_error([], [])


class TestGoodness:
    def test_fixtures(self):
        assert M.to_goodness(MetricKind.ACCURACY, 0.8) == pytest.approx(0.8)
        assert M.to_goodness(MetricKind.STATISTICAL_PARITY, -0.5) == pytest.approx(0.5)
        assert M.to_goodness(MetricKind.DISPARATE_IMPACT, 3.0) == pytest.approx(1 / 3)

    def test_di_symmetric_in_reciprocal(self):
        for v in (0.2, 0.5, 1.0, 2.0, 7.5):
            assert M.to_goodness(MetricKind.DISPARATE_IMPACT, v) == pytest.approx(
                M.to_goodness(MetricKind.DISPARATE_IMPACT, 1 / v)
            )

    def test_undefined_rejected(self):
        with pytest.raises(ValueError):
            M.to_goodness(MetricKind.DISPARATE_IMPACT, M.UNDEFINED)

    @given(st.sampled_from(list(MetricKind)), st.floats(-5, 5, allow_nan=False))
    def test_range(self, kind, raw):
        if kind is MetricKind.DISPARATE_IMPACT and raw <= 0:
            raw = abs(raw) + 0.1
        if kind in (MetricKind.MEAN_ABSOLUTE_ERROR, MetricKind.MEAN_SQUARED_ERROR):
            raw = abs(raw)
        g = M.to_goodness(kind, raw)
        assert 0.0 <= g <= 1.0

    def test_monotone_toward_target(self):
        # closer to 0 is better for target-zero metrics
        values = [-0.9, -0.5, -0.1, 0.0, 0.2, 0.7]
        ordered = sorted(values, key=abs)
        gs = [M.to_goodness(MetricKind.STATISTICAL_PARITY, v) for v in ordered]
        assert gs == sorted(gs, reverse=True)
        # lower loss is better
        assert M.to_goodness(MetricKind.MEAN_SQUARED_ERROR, 0.1) > M.to_goodness(
            MetricKind.MEAN_SQUARED_ERROR, 2.0
        )


class TestHarmonicMean:
    def test_all_equal(self):
        assert M.harmonic_mean([0.7, 0.7, 0.7]) == pytest.approx(0.7)

    def test_fixture(self):
        assert M.harmonic_mean([0.5, 1.0]) == pytest.approx(2 / 3, abs=1e-12)

    def test_zero_dominates(self):
        assert M.harmonic_mean([0.0, 0.9]) == 0.0

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            M.harmonic_mean([])

    def test_weighted(self):
        # all weight on the first value
        assert M.harmonic_mean([0.5, 1.0], weights=[1.0, 0.0]) == pytest.approx(0.5)

    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=20))
    def test_am_hm_inequality(self, values):
        assert M.harmonic_mean(values) <= np.mean(values) + 1e-12


class TestGammaTail:
    def test_against_mpmath(self):
        for a in (0.5, 1.0, 2.5, 7.0, 15.0):
            for x in (0.0, 0.01, 0.5, 1.0, 3.0, 10.0, 40.0):
                expected = float(mpmath.gammainc(a, x, mpmath.inf, regularized=True))
                assert M.regularized_gamma_q(a, x) == pytest.approx(expected, abs=1e-12)

    def test_chi_square_sf(self):
        assert M.chi_square_sf(0.0, 1) == 1.0
        assert M.chi_square_sf(3.841458820694124, 1) == pytest.approx(0.05, abs=1e-9)


def _midrank_oracle(groups):
    """Independent brute-force midrank H computation for the tests."""
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    ranks = []
    for v in pooled:
        less = sum(1 for u in pooled if u < v)
        equal = sum(1 for u in pooled if u == v)
        ranks.append(less + (equal + 1) / 2.0)
    h = 0.0
    offset = 0
    for g in groups:
        mean_rank = sum(ranks[offset : offset + len(g)]) / len(g)
        h += len(g) * (mean_rank - (n + 1) / 2.0) ** 2
        offset += len(g)
    h *= 12.0 / (n * (n + 1))
    from collections import Counter

    ties = Counter(pooled)
    corr = 1.0 - sum(t**3 - t for t in ties.values()) / (n**3 - n)
    return 0.0 if corr <= 0 else h / corr


class TestKruskalWallis:
    def test_identical_groups(self):
        h, p = M.kruskal_wallis([[1, 2, 3], [1, 2, 3]])
        assert h == 0.0 and p == 1.0

    def test_separated_fixture(self):
        h, p = M.kruskal_wallis([[1, 2, 3], [4, 5, 6]])
        assert h == pytest.approx(27 / 7, abs=1e-12)
        assert p == pytest.approx(0.049534613435, abs=1e-9)

    def test_ties_match_midrank_oracle(self):
        groups = [[1, 1, 2], [1, 2, 2]]
        h, _ = M.kruskal_wallis(groups)
        assert h == pytest.approx(_midrank_oracle(groups), abs=1e-9)

    def test_all_identical_values(self):
        h, p = M.kruskal_wallis([[5, 5], [5, 5, 5]])
        assert (h, p) == (0.0, 1.0)

    def test_against_scipy(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            sizes = rng.integers(2, 12, size=int(rng.integers(2, 5)))
            groups = [list(rng.integers(0, 8, size=s).astype(float)) for s in sizes]
            if len({v for g in groups for v in g}) == 1:
                continue
            h, p = M.kruskal_wallis(groups)
            h_ref, p_ref = scipy.stats.kruskal(*groups)
            assert h == pytest.approx(h_ref, abs=1e-9)
            assert p == pytest.approx(p_ref, abs=1e-9)

    def test_monotone_transform_invariance(self):
        groups = [[1.0, 3.0, 4.0], [2.0, 6.0, 7.0, 9.0]]
        transformed = [[math.exp(v) for v in g] for g in groups]
        assert M.kruskal_wallis(groups) == pytest.approx(M.kruskal_wallis(transformed))

    def test_zero_h_when_mean_ranks_equal(self):
        h, p = M.kruskal_wallis([[1, 4], [2, 3]])
        assert h == 0.0 and p == 1.0

    def test_p_close_to_permutation_oracle(self):
        # at moderate n the chi-square tail should track a permutation test
        rng = np.random.default_rng(7)
        a = list(rng.normal(size=15))
        b = list(rng.normal(loc=0.8, size=15))
        h_obs, p = M.kruskal_wallis([a, b])
        pooled = np.array(a + b)
        exceed = 0
        n_perm = 4000
        for _ in range(n_perm):
            perm = rng.permutation(pooled)
            h_perm, _ = M.kruskal_wallis([perm[:15], perm[15:]])
            if h_perm >= h_obs - 1e-12:
                exceed += 1
        mc_p = exceed / n_perm
        assert p == pytest.approx(mc_p, abs=0.05)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            M.kruskal_wallis([[1, 2, 3]])
        with pytest.raises(ValueError):
            M.kruskal_wallis([[1, 2], []])
        with pytest.raises(ValueError):
            M.kruskal_wallis([[1], [2]])


class TestQuestionnaire:
    def test_equal_outcomes(self):
        got = M.recommend_metrics({"task": "classification", "focus": "equal-outcomes"})
        assert got == {MetricKind.STATISTICAL_PARITY, MetricKind.DISPARATE_IMPACT}

    def test_equal_errors(self):
        got = M.recommend_metrics({"task": "classification", "focus": "equal-errors"})
        assert got == {MetricKind.AVERAGE_ODDS, MetricKind.EQUAL_OPPORTUNITY}

    def test_both(self):
        got = M.recommend_metrics({"task": "classification", "focus": "both"})
        assert got == {
            MetricKind.STATISTICAL_PARITY,
            MetricKind.DISPARATE_IMPACT,
            MetricKind.AVERAGE_ODDS,
            MetricKind.EQUAL_OPPORTUNITY,
        }

    def test_style_refines(self):
        got = M.recommend_metrics(
            {"task": "classification", "focus": "equal-outcomes", "style": "ratio"}
        )
        assert got == {MetricKind.DISPARATE_IMPACT}

    def test_regression_short_circuits(self):
        assert M.recommend_metrics({"task": "regression"}) == set()

    def test_missing_required_answer(self):
        with pytest.raises(ValueError):
            M.recommend_metrics({"task": "classification"})
        with pytest.raises(ValueError):
            M.recommend_metrics({})

    def test_unknown_answer(self):
        with pytest.raises(ValueError):
            M.recommend_metrics({"task": "sorting"})
