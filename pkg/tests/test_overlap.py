from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segscore import (
    EmptyPolicy,
    LabelMask,
    ProbabilityMap,
    Undefined,
    accuracy,
    auc_single,
    auc_trapezoid,
    confuse_binary,
    dsc,
    iou,
    is_defined,
    kappa,
    metric_set,
    roc_curve,
    sensitivity,
    specificity,
)
from segscore.confusion import ConfusionCounts
from segscore.overlap import RocPoint

counts_strategy = st.builds(
    ConfusionCounts,
    tp=st.integers(0, 10**6),
    fp=st.integers(0, 10**6),
    tn=st.integers(0, 10**6),
    fn=st.integers(0, 10**6),
).filter(lambda c: c.total > 0)


class TestFormulas:
    def test_iou_fixture(self, fixture_4x4_counts):
        assert iou(fixture_4x4_counts) == pytest.approx(1 / 3, abs=1e-15)

    def test_iou_perfect(self):
        assert iou(ConfusionCounts(tp=5, fp=0, tn=1, fn=0)) == 1.0

    def test_iou_empty_both_policies(self):
        c = ConfusionCounts(tp=0, fp=0, tn=4, fn=0)
        assert iou(c, EmptyPolicy.SCORE_ONE) == 1.0
        assert iou(c, EmptyPolicy.UNDEFINED) == Undefined("EMPTY_BOTH")

    def test_dsc_fixture(self, fixture_4x4_counts):
        assert dsc(fixture_4x4_counts) == 0.5

    def test_dsc_disjoint(self):
        assert dsc(ConfusionCounts(tp=0, fp=3, tn=1, fn=2)) == 0.0

    def test_dsc_identical(self):
        assert dsc(ConfusionCounts(tp=7, fp=0, tn=2, fn=0)) == 1.0

    def test_sensitivity(self, fixture_4x4_counts):
        assert sensitivity(fixture_4x4_counts) == 0.5
        assert sensitivity(ConfusionCounts(tp=3, fp=1, tn=0, fn=0)) == 1.0
        assert sensitivity(ConfusionCounts(tp=0, fp=1, tn=3, fn=0)) == \
            Undefined("NO_POSITIVES_IN_GT")

    def test_specificity(self, fixture_4x4_counts):
        assert specificity(fixture_4x4_counts) == pytest.approx(5 / 6, abs=1e-15)
        # empty prediction, non-full gt
        assert specificity(ConfusionCounts(tp=0, fp=0, tn=5, fn=2)) == 1.0
        # full-image prediction
        assert specificity(ConfusionCounts(tp=2, fp=5, tn=0, fn=0)) == 0.0
        assert specificity(ConfusionCounts(tp=4, fp=0, tn=0, fn=0)) == \
            Undefined("NO_NEGATIVES_IN_GT")

    def test_accuracy(self, fixture_4x4_counts):
        assert accuracy(fixture_4x4_counts) == 0.75
        assert accuracy(ConfusionCounts(tp=4, fp=0, tn=0, fn=0)) == 1.0

    def test_accuracy_inflation(self):
        # empty prediction on 5% foreground: only background is "correct"
        c = ConfusionCounts(tp=0, fp=0, tn=95, fn=5)
        assert accuracy(c) == 0.95

    def test_auc_single(self, fixture_4x4_counts):
        assert auc_single(ConfusionCounts(tp=3, fp=0, tn=4, fn=0)) == 1.0
        assert auc_single(ConfusionCounts(tp=5, fp=5, tn=5, fn=5)) == 0.5
        assert auc_single(fixture_4x4_counts) == pytest.approx(2 / 3, abs=1e-15)
        assert isinstance(auc_single(ConfusionCounts(tp=0, fp=2, tn=2, fn=0)), Undefined)

    def test_kappa_balanced(self):
        c = ConfusionCounts(tp=40, fp=10, tn=40, fn=10)
        assert kappa(c) == pytest.approx(0.6, abs=1e-15)

    def test_kappa_fixture(self, fixture_4x4_counts):
        assert kappa(fixture_4x4_counts) == pytest.approx(1 / 3, abs=1e-15)

    def test_kappa_degenerate(self):
        # gt and pred both entirely one class
        assert kappa(ConfusionCounts(tp=0, fp=0, tn=16, fn=0)) == \
            Undefined("DEGENERATE_MARGINALS")


class TestMetricSet:
    def test_fixture_panel(self, fixture_4x4_counts):
        ms = metric_set(fixture_4x4_counts)
        assert ms.iou == pytest.approx(1 / 3, abs=1e-15)
        assert ms.dsc == 0.5
        assert ms.sensitivity == 0.5
        assert ms.specificity == pytest.approx(5 / 6, abs=1e-15)
        assert ms.accuracy == 0.75
        assert ms.auc == pytest.approx(2 / 3, abs=1e-15)
        assert ms.kappa == pytest.approx(1 / 3, abs=1e-15)

    def test_identical_nonempty(self):
        ms = metric_set(ConfusionCounts(tp=4, fp=0, tn=12, fn=0))
        for name, v in ms.as_dict().items():
            assert v == 1.0, name

    def test_empty_both_score_one(self):
        ms = metric_set(ConfusionCounts(tp=0, fp=0, tn=9, fn=0), EmptyPolicy.SCORE_ONE)
        assert ms.iou == 1.0 and ms.dsc == 1.0
        assert ms.sensitivity == Undefined("NO_POSITIVES_IN_GT")
        assert ms.specificity == 1.0


class TestProperties:
    @settings(max_examples=300)
    @given(counts_strategy)
    def test_ranges(self, c):
        ms = metric_set(c)
        for name in ("iou", "dsc", "sensitivity", "specificity", "accuracy", "auc"):
            v = getattr(ms, name)
            if is_defined(v):
                assert 0.0 <= v <= 1.0
        if is_defined(ms.kappa):
            assert -1.0 - 1e-12 <= ms.kappa <= 1.0 + 1e-12

    @settings(max_examples=300)
    @given(counts_strategy)
    def test_iou_le_dsc(self, c):
        i, d = iou(c), dsc(c)
        if is_defined(i) and is_defined(d):
            assert i <= d + 1e-15
            if d not in (0.0, 1.0):
                assert i < d

    def test_monotonic_in_tp(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            fp, tn, fn = (int(v) for v in rng.integers(0, 100, 3))
            tp = int(rng.integers(0, 100))
            lo = ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)
            hi = ConfusionCounts(tp=tp + 5, fp=fp, tn=tn, fn=fn)
            for fn_metric in (dsc, iou, sensitivity):
                a, b = fn_metric(lo), fn_metric(hi)
                if is_defined(a) and is_defined(b):
                    assert b >= a - 1e-15
            assert accuracy(hi) >= accuracy(lo) - 1e-15

    @settings(max_examples=200)
    @given(counts_strategy)
    def test_swap_duality(self, c):
        a = sensitivity(c)
        b = specificity(c.swapped())
        if isinstance(a, Undefined) or isinstance(b, Undefined):
            assert isinstance(a, Undefined) and isinstance(b, Undefined)
        else:
            assert a == pytest.approx(b, abs=1e-15)

    def test_coin_flip_statistics(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            gt = LabelMask.from_array(rng.integers(0, 2, size=(256, 256)))
            pred = LabelMask.from_array(rng.integers(0, 2, size=(256, 256)))
            c = confuse_binary(gt, pred, 1)
            assert abs(kappa(c)) < 0.05
            assert abs(auc_single(c) - 0.5) < 0.05


class TestRoc:
    def test_perfect_scorer(self):
        gt = LabelMask.from_array(np.array([[0, 1], [1, 0]]))
        prob = np.array([[0.0, 1.0], [1.0, 0.0]])
        pts = roc_curve(gt, prob, 1, [0.5])
        assert pts == [RocPoint(threshold=0.5, tpr=1.0, fpr=0.0)]

    def test_constant_scorer(self):
        gt = LabelMask.from_array(np.array([[0, 1], [1, 0]]))
        prob = np.full((2, 2), 0.5)
        pts = roc_curve(gt, prob, 1, [0.4, 0.6])
        assert [(p.tpr, p.fpr) for p in pts] == [(0.0, 0.0), (1.0, 1.0)]
        assert pts[0].threshold == 0.6  # descending threshold order

    def test_hand_binarization(self):
        gt = LabelMask.from_array(np.array([[0, 0, 1, 1]]))
        prob = np.array([0.1, 0.6, 0.4, 0.9])
        (pt,) = roc_curve(gt, prob, 1, [0.5])
        assert pt.tpr == 0.5 and pt.fpr == 0.5

    def test_probability_out_of_range(self):
        gt = LabelMask.from_array(np.array([[0, 1]]))
        with pytest.raises(ValueError, match="\\[0, 1\\]"):
            roc_curve(gt, np.array([0.5, 1.5]), 1, [0.5])

    def test_probability_map_input(self):
        gt = LabelMask.from_array(np.array([[0, 0, 1, 1]]))
        prob = ProbabilityMap(shape=(1, 4), values=np.array([0.1, 0.6, 0.4, 0.9]))
        (pt,) = roc_curve(gt, prob, 1, [0.5])
        assert pt.tpr == 0.5 and pt.fpr == 0.5


class TestAucTrapezoid:
    def test_perfect(self):
        assert auc_trapezoid([RocPoint(0.5, 1.0, 0.0)]) == 1.0

    def test_diagonal(self):
        pts = [RocPoint(0.0, t, t) for t in (0.25, 0.5, 0.75)]
        assert auc_trapezoid(pts) == 0.5

    def test_single_midpoint(self):
        assert auc_trapezoid([RocPoint(0.5, 0.5, 0.5)]) == 0.5

    def test_matches_auc_single_at_one_threshold(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            gt = LabelMask.from_array(rng.integers(0, 2, size=(8, 8)))
            if len(np.unique(gt.labels)) < 2:
                continue
            prob = rng.random((8, 8))
            t = float(rng.random())
            pts = roc_curve(gt, prob, 1, [t])
            pred = LabelMask.from_array((prob >= t).astype(int))
            c = confuse_binary(gt, pred, 1)
            single = auc_single(c)
            if is_defined(single):
                assert auc_trapezoid(pts) == pytest.approx(single, abs=1e-12)
