import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthmask import InputError, InstanceMask, average_precision, evaluate, mask_iou
from depthmask.evaluation import COCO_THRESHOLDS, EvalResult, ap_from_flags, match_predictions
from oracles import brute_ap, random_eval_case


def mask(bitmap, ident=1, score=1.0, category="Car", image_id=0):
    return InstanceMask(ident, category, score, np.asarray(bitmap, dtype=bool), image_id)


def to_masks(preds, gts):
    p = [mask(bm, i, s, image_id=img) for s, img, i, bm in preds]
    g = [mask(bm, 100 + j, image_id=img) for j, (img, bm) in enumerate(gts)]
    return p, g


def rect(r0, r1, c0, c1, shape=(4, 4)):
    a = np.zeros(shape, dtype=bool)
    a[r0:r1, c0:c1] = True
    return a


def test_iou_examples():
    a = rect(0, 2, 0, 4)
    assert mask_iou(a, a) == 1.0
    assert mask_iou(a, rect(2, 4, 0, 4)) == 0.0
    # 2x4 rectangles shifted by two rows overlap in 4 of 12 pixels
    assert mask_iou(rect(0, 2, 0, 4), rect(1, 3, 0, 4)) == pytest.approx(1 / 3)
    assert mask_iou(np.zeros((4, 4)), np.zeros((4, 4))) == 0.0
    with pytest.raises(InputError):
        mask_iou(np.zeros((4, 4)), np.zeros((4, 3)))


def test_ap_trivial_cases():
    g = mask(rect(0, 2, 0, 2))
    assert average_precision([mask(rect(0, 2, 0, 2))], [g]) == 1.0
    assert average_precision([], [g]) == 0.0
    assert math.isnan(average_precision([mask(rect(0, 2, 0, 2))], []))
    assert ap_from_flags([], 3) == 0.0


def test_hand_built_three_predictions_two_truths():
    g1, g2 = rect(0, 2, 0, 2, (6, 6)), rect(3, 6, 3, 6, (6, 6))
    p_a = rect(0, 2, 0, 3, (6, 6))  # IoU 4/6 with g1
    p_b = rect(0, 1, 4, 6, (6, 6))  # misses both
    p_c = rect(3, 6, 3, 5, (6, 6))  # IoU 6/9 with g2
    preds = [mask(p_a, 1, 0.9), mask(p_b, 2, 0.8), mask(p_c, 3, 0.7)]
    gts = [mask(g1, 10), mask(g2, 11)]
    # ranked TP, FP, TP: area = 1/2 * 1 + 1/2 * 2/3
    assert average_precision(preds, gts, 0.5) == pytest.approx(5 / 6, abs=1e-15)
    assert average_precision(preds, gts, 0.7) == 0.0
    raw_p = [(0.9, 0, 1, p_a), (0.8, 0, 2, p_b), (0.7, 0, 3, p_c)]
    assert float(brute_ap(raw_p, [(0, g1), (0, g2)], 0.5)) == pytest.approx(5 / 6, abs=1e-15)


def test_greedy_prefers_best_iou_and_each_truth_once():
    g1, g2 = rect(0, 4, 0, 2), rect(0, 4, 2, 4)
    p = [mask(rect(0, 4, 0, 3), 1, 0.9), mask(rect(0, 4, 2, 4), 2, 0.8), mask(g1, 3, 0.7)]
    gts = [mask(g1, 10), mask(g2, 11)]
    # first prediction takes g1 (IoU 2/3 > 1/3), second takes g2, third is a duplicate
    assert match_predictions(p, gts, 0.5) == [True, True, False]


def test_score_ties_broken_by_image_then_id():
    g = mask(rect(0, 2, 0, 2), 10)
    p = [mask(rect(0, 2, 0, 2), 7, 0.5), mask(rect(0, 2, 0, 2), 3, 0.5)]
    assert match_predictions(p, [g], 0.5) == [True, False]


def test_other_images_never_match():
    g = mask(rect(0, 2, 0, 2), 10, image_id=0)
    p = mask(rect(0, 2, 0, 2), 1, image_id=1)
    assert average_precision([p], [g]) == 0.0


def test_evaluate_perfect_and_empty():
    gts = [
        mask(rect(0, 2, 0, 2), 1, category="Car"),
        mask(rect(2, 4, 2, 4), 2, category="Pedestrian"),
        mask(rect(0, 1, 3, 4), 3, category="Cyclist"),
    ]
    res = evaluate([mask(m.bitmap, m.id, 0.9, m.category) for m in gts], gts)
    assert res.ap == res.ap50 == {"Car": 1.0, "Pedestrian": 1.0, "Cyclist": 1.0}
    assert res.mean_ap == res.mean_ap50 == 1.0
    empty = evaluate([], gts)
    assert empty.mean_ap == empty.mean_ap50 == 0.0


def test_category_without_truth_is_nan_and_skipped():
    g = [mask(rect(0, 2, 0, 2), 1, category="Car")]
    res = evaluate([mask(rect(0, 2, 0, 2), 1, 0.9, "Car")], g)
    assert math.isnan(res.ap["Pedestrian"])
    assert res.mean_ap == 1.0
    assert "nan" in res.table()
    assert res.as_dict()["AP"]["average"] == 1.0


def test_table_layout():
    res = EvalResult({"Car": 0.5, "Pedestrian": 0.25, "Cyclist": 0.0}, {"Car": 1.0, "Pedestrian": 0.5, "Cyclist": 0.0})
    lines = res.table().splitlines()
    assert lines[0].split() == ["car", "pedestrian", "cyclist", "average"]
    assert lines[1].split() == ["AP", "50.00", "25.00", "0.00", "25.00"]
    assert lines[2].split() == ["AP50", "100.00", "50.00", "0.00", "50.00"]


def test_thresholds_are_the_ten_coco_steps():
    assert COCO_THRESHOLDS == (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_agrees_with_brute_force(seed):
    preds, gts = random_eval_case(random.Random(seed))
    p, g = to_masks(preds, gts)
    for t in (0.5, 0.75, 0.95):
        ref = brute_ap(preds, gts, t)
        got = average_precision(p, g, t)
        if ref is None:
            assert math.isnan(got)
        else:
            assert abs(got - float(ref)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_ranking_only_and_lenient_threshold_properties(seed, factor):
    preds, gts = random_eval_case(random.Random(seed))
    if not gts:
        return
    p, g = to_masks(preds, gts)
    res = evaluate(p, g, categories=["Car"])
    assert 0.0 <= res.ap["Car"] <= res.ap50["Car"] <= 1.0
    scaled = [mask(m.bitmap, m.id, m.score * factor / 100, image_id=m.image_id) for m in p]
    assert average_precision(scaled, g) == pytest.approx(average_precision(p, g), abs=1e-15)
    # a zero-overlap false positive ranked last never helps
    fp = mask(np.zeros_like(g[0].bitmap), 999, 0.0, image_id=g[0].image_id)
    assert average_precision(p + [fp], g) <= average_precision(p, g)
