import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subseg_qe.metrics import (
    apply_threshold, f1_product_curve, f1_suite, line_search_threshold, sentence_metrics,
)

B, O = "BAD", "OK"


class TestF1Suite:
    def test_worked_example(self):
        f_bad, f_ok, f_multi = f1_suite([B, O, O, O], [B, B, O, O])
        assert f_bad == pytest.approx(2 / 3)
        assert f_ok == pytest.approx(0.8)
        assert f_multi == pytest.approx(8 / 15)

    def test_perfect(self):
        assert f1_suite([B, O, B], [B, O, B]) == (1.0, 1.0, 1.0)

    def test_all_ok_prediction(self):
        f_bad, _, f_multi = f1_suite([O, O, O], [O, B, O])
        assert f_bad == 0.0 and f_multi == 0.0

    def test_numeric_labels_equal_strings(self):
        assert f1_suite([1, 0, 0, 0], [1, 1, 0, 0]) == f1_suite([B, O, O, O], [B, B, O, O])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            f1_suite([B], [B, O])


class TestLineSearch:
    def test_worked_example(self):
        probs, gold = [0.1, 0.4, 0.9], [O, B, B]
        th = line_search_threshold(probs, gold)
        assert th == pytest.approx(0.25)
        assert f1_suite(apply_threshold(probs, th), gold)[2] == 1.0

    @pytest.mark.parametrize("gold", [[B, B, B], [O, O, O]])
    def test_single_class_warns(self, gold):
        with pytest.warns(RuntimeWarning):
            assert line_search_threshold([0.2, 0.5, 0.7], gold) == 0.5

    def test_ties_pick_smallest(self):
        # every midpoint between 0.2 and 0.8 separates the classes equally well
        th = line_search_threshold([0.2, 0.2, 0.8, 0.8], [O, O, B, B])
        assert th == pytest.approx(0.5)
        assert line_search_threshold([0.5, 0.5], [O, B]) == 0.0

    def test_curve_agrees_with_f1_suite(self):
        rng = np.random.default_rng(3)
        probs = rng.random(50)
        gold = rng.random(50) < 0.3
        grid = np.linspace(0, 1, 101)
        curve = f1_product_curve(probs, gold, grid)
        for t, value in zip(grid, curve):
            assert value == pytest.approx(f1_suite(probs >= t, gold)[2], abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 100), st.booleans()), min_size=2, max_size=40))
    def test_not_worse_than_fine_grid(self, rows):
        probs = np.array([p / 100 for p, _ in rows])
        gold = np.array([g for _, g in rows])
        if gold.all() or not gold.any():
            return
        best = f1_product_curve(probs, gold, [line_search_threshold(probs, gold)])[0]
        grid = f1_product_curve(probs, gold, np.linspace(0, 1, 10001))
        assert best >= grid.max() - 1e-12

    def test_threshold_is_bad_inclusive(self):
        assert list(apply_threshold([0.3, 0.5, 0.7], 0.5)) == [False, True, True]


class TestSentenceMetrics:
    def test_identity(self):
        m = sentence_metrics([0.1, 0.5, 0.3], [0.1, 0.5, 0.3])
        assert m.pearson_r == pytest.approx(1.0)
        assert m.mae == 0.0 and m.rmse == 0.0
        assert m.spearman_rho == pytest.approx(1.0)

    def test_monotone_transform(self):
        gold = np.array([0.1, 0.4, 0.5, 0.9, 2.0])
        m = sentence_metrics(gold ** 2, gold)
        assert m.spearman_rho == pytest.approx(1.0)
        assert m.pearson_r < 1.0

    def test_reversal(self):
        m = sentence_metrics([1, 2, 3], [3, 2, 1])
        assert m.pearson_r == pytest.approx(-1.0)
        assert m.spearman_rho == pytest.approx(-1.0)

    def test_errors(self):
        m = sentence_metrics([1.0, 2.0], [2.0, 4.0])
        assert m.mae == pytest.approx(1.5)
        assert m.rmse == pytest.approx(math.sqrt(2.5))

    def test_constant_vector_is_nan(self):
        m = sentence_metrics([0.3, 0.3, 0.3], [0.1, 0.2, 0.3])
        assert math.isnan(m.pearson_r) and math.isnan(m.spearman_rho)
        assert m.mae == pytest.approx(0.1)

    def test_ties_use_average_ranks(self):
        m = sentence_metrics([1, 1, 2], [1, 2, 3])
        assert m.spearman_rho == pytest.approx(np.sqrt(3) / 2)

    def test_matches_numpy(self):
        rng = np.random.default_rng(0)
        a, b = rng.random(30), rng.random(30)
        assert sentence_metrics(a, b).pearson_r == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)
