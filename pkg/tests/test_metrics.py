"""Detection AP/AR, agreement, and F1 against a from-scratch oracle.

The oracle reimplements greedy matching and 101-point interpolation
with the dumbest possible data structures (rescan everything per recall
point). Box IoU itself is shared with the library; its correctness has
its own raster oracle in test_geometry.
"""

from __future__ import annotations

import random

import pytest

from bankspread.docmodel import DetectedObject, TableCategory
from bankspread.geometry import Box, iou
from bankspread.metrics import (
    IOU_THRESHOLDS,
    EvalPair,
    classifier_f1,
    detection_metrics,
    krippendorff_alpha,
)


def obj(box: Box, label="t", score: float = 0.9, page: int = 0) -> DetectedObject:
    return DetectedObject(box=box, label=label, score=score, page_index=page)


# --- oracle ------------------------------------------------------------------


def oracle_match(pairs, label, threshold):
    ranked = []
    for pi, pair in enumerate(pairs):
        for j, p in enumerate(pair.predictions):
            if p.label == label:
                ranked.append((pi, j, p))
    ranked.sort(key=lambda r: (-r[2].score, r[0], r[1]))
    n_gt = sum(1 for pair in pairs for g in pair.ground_truth if g.label == label)
    taken = set()
    flags = []
    for pi, _, p in ranked:
        candidates = [
            (iou(p.box, g.box), -gi)
            for gi, g in enumerate(pairs[pi].ground_truth)
            if g.label == label and (pi, gi) not in taken
        ]
        best = max(candidates, default=None)
        if best is not None and best[0] >= threshold:
            taken.add((pi, -best[1]))
            flags.append(True)
        else:
            flags.append(False)
    return flags, n_gt


def oracle_ap_and_recall(flags, n_gt):
    if n_gt == 0:
        return 0.0, 0.0
    points = []
    tp = 0
    for k, f in enumerate(flags, start=1):
        tp += int(f)
        points.append((tp / n_gt, tp / k))
    total = 0.0
    for step in range(101):
        r = step / 100
        total += max((prec for rec, prec in points if rec >= r), default=0.0)
    return total / 101, (points[-1][0] if points else 0.0)


def oracle_detection(pairs):
    labels = set()
    for pair in pairs:
        labels.update(g.label for g in pair.ground_truth)
        labels.update(p.label for p in pair.predictions)
    per_class = {}
    for label in sorted(labels, key=str):
        aps, recalls = [], []
        for t in IOU_THRESHOLDS:
            flags, n_gt = oracle_match(pairs, label, t)
            ap, recall = oracle_ap_and_recall(flags, n_gt)
            aps.append(ap)
            recalls.append(recall)
        per_class[label] = {
            "AP50": aps[0],
            "AP75": aps[5],
            "AP": sum(aps) / 10,
            "AR": sum(recalls) / 10,
        }
    if not per_class:
        return {"AP50": 0.0, "AP75": 0.0, "AP": 0.0, "AR": 0.0, "per_class": {}}
    n = len(per_class)
    return {
        "AP50": sum(v["AP50"] for v in per_class.values()) / n,
        "AP75": sum(v["AP75"] for v in per_class.values()) / n,
        "AP": sum(v["AP"] for v in per_class.values()) / n,
        "AR": sum(v["AR"] for v in per_class.values()) / n,
        "per_class": per_class,
    }


def random_instance(rng: random.Random) -> list[EvalPair]:
    classes = ["alpha", "beta", "gamma"][: rng.randint(1, 3)]
    scores = iter(rng.sample(range(1, 100_000), 400))  # distinct ranks
    pairs = []
    for page in range(rng.randint(1, 3)):
        gts, preds = [], []
        for label in classes:
            for _ in range(rng.randint(0, 5)):
                x, y = rng.randint(0, 400), rng.randint(0, 400)
                w, h = rng.randint(10, 120), rng.randint(10, 120)
                box = Box(x, y, x + w, y + h)
                gts.append(obj(box, label, 1.0, page))
                if rng.random() < 0.75:
                    jx1 = max(0, x + rng.randint(-15, 15))
                    jy1 = max(0, y + rng.randint(-15, 15))
                    jx2 = x + w + rng.randint(-15, 15)
                    jy2 = y + h + rng.randint(-15, 15)
                    if jx2 > jx1 and jy2 > jy1:
                        jittered = Box(jx1, jy1, jx2, jy2)
                        preds.append(obj(jittered, label, next(scores) / 100_000, page))
            for _ in range(rng.randint(0, 2)):
                x, y = rng.randint(0, 500), rng.randint(0, 500)
                fp = Box(x, y, x + rng.randint(5, 80), y + rng.randint(5, 80))
                preds.append(obj(fp, label, next(scores) / 100_000, page))
        pairs.append(EvalPair(tuple(gts), tuple(preds)))
    return pairs


# --- detection fixtures --------------------------------------------------------


def test_straddling_prediction_separates_the_thresholds():
    # IoU 0.6: a hit at 0.50 (and at 0.60 exactly), a miss at 0.75
    pairs = [EvalPair((obj(Box(0, 0, 10, 10)),), (obj(Box(0, 0, 10, 6)),))]
    m = detection_metrics(pairs)
    assert m.ap50 == 1.0
    assert m.ap75 == 0.0
    assert m.ar == pytest.approx(0.3)
    assert m.ap == pytest.approx(0.3)


def test_missed_box_caps_recall_and_ap():
    gt = (obj(Box(0, 0, 10, 10)), obj(Box(100, 100, 110, 110)))
    pairs = [EvalPair(gt, (obj(Box(0, 0, 10, 10), score=0.8),))]
    m = detection_metrics(pairs)
    assert m.ar == pytest.approx(0.5)
    assert m.ap50 == pytest.approx(51 / 101)


def test_false_positive_ranked_above_hit_lowers_ap():
    gt = (obj(Box(0, 0, 10, 10)),)
    preds = (
        obj(Box(500, 500, 510, 510), score=0.95),
        obj(Box(0, 0, 10, 10), score=0.60),
    )
    m = detection_metrics([EvalPair(gt, preds)])
    # precision reaches only 1/2 by the time recall hits 1.0
    assert m.ap50 == pytest.approx(0.5)
    assert m.ar == 1.0


def test_predictions_cannot_match_across_pages():
    box = Box(0, 0, 10, 10)
    pairs = [
        EvalPair((obj(box, page=0),), ()),
        EvalPair((), (obj(box, page=1),)),
    ]
    m = detection_metrics(pairs)
    assert m.ap50 == 0.0 and m.ar == 0.0


def test_each_ground_truth_matches_at_most_once():
    gt = (obj(Box(0, 0, 10, 10)),)
    preds = (
        obj(Box(0, 0, 10, 10), score=0.9),
        obj(Box(0, 0, 10, 10), score=0.8),  # duplicate: forced FP
    )
    flags_m = detection_metrics([EvalPair(gt, preds)])
    assert flags_m.ar == 1.0
    assert flags_m.ap50 == 1.0  # precision envelope peaks before the dup


def test_hallucinated_class_scores_zero_and_drags_the_macro():
    pairs = [
        EvalPair(
            (obj(Box(0, 0, 10, 10), "real"),),
            (obj(Box(0, 0, 10, 10), "real", 0.9), obj(Box(0, 0, 10, 10), "fake", 0.8)),
        )
    ]
    m = detection_metrics(pairs)
    assert m.per_class["fake"] == {"AP50": 0.0, "AP75": 0.0, "AP": 0.0, "AR": 0.0}
    assert m.per_class["real"]["AP50"] == 1.0
    assert m.ap50 == 0.5


def test_empty_input_scores_zero():
    m = detection_metrics([])
    assert (m.ap50, m.ap75, m.ap, m.ar) == (0.0, 0.0, 0.0, 0.0)
    assert m.per_class == {}


def test_as_dict_uses_enum_values_for_class_keys():
    pairs = [
        EvalPair(
            (obj(Box(0, 0, 10, 10), TableCategory.CHECK),),
            (obj(Box(0, 0, 10, 10), TableCategory.CHECK, 0.9),),
        )
    ]
    d = detection_metrics(pairs).as_dict()
    assert d["per_class"]["Check"]["AP50"] == 1.0
    assert set(d) == {"AP50", "AP75", "AP", "AR", "per_class"}


def test_ap_is_monotone_in_the_iou_threshold():
    rng = random.Random(5)
    from bankspread.metrics import _average_precision, _match_class

    for _ in range(20):
        pairs = random_instance(rng)
        for label in ("alpha", "beta", "gamma"):
            aps = []
            for t in IOU_THRESHOLDS:
                flags, n_gt = _match_class(pairs, label, t)
                aps.append(_average_precision(flags, n_gt)[0])
            assert all(a >= b - 1e-12 for a, b in zip(aps, aps[1:]))


def test_detection_metrics_agree_with_the_oracle():
    rng = random.Random(41)
    for _ in range(60):
        pairs = random_instance(rng)
        got = detection_metrics(pairs)
        want = oracle_detection(pairs)
        assert got.ap50 == pytest.approx(want["AP50"], abs=1e-12)
        assert got.ap75 == pytest.approx(want["AP75"], abs=1e-12)
        assert got.ap == pytest.approx(want["AP"], abs=1e-12)
        assert got.ar == pytest.approx(want["AR"], abs=1e-12)
        for label, values in want["per_class"].items():
            for key, value in values.items():
                assert got.per_class[label][key] == pytest.approx(value, abs=1e-12)


def test_perfect_predictions_score_one_everywhere():
    rng = random.Random(11)
    gts = []
    for i in range(12):
        x, y = rng.randint(0, 800), rng.randint(0, 800)
        gts.append(obj(Box(x, y, x + 50, y + 30), "t", 1.0, 0))
    preds = tuple(
        obj(g.box, "t", 0.5 + i * 0.01, 0) for i, g in enumerate(gts)
    )
    m = detection_metrics([EvalPair(tuple(gts), preds)])
    assert (m.ap50, m.ap75, m.ap, m.ar) == (1.0, 1.0, 1.0, 1.0)


# --- agreement -----------------------------------------------------------------


def test_alpha_identical_annotations():
    boxes = [obj(Box(i * 20, 0, i * 20 + 10, 10), "Table") for i in range(5)]
    assert krippendorff_alpha(boxes, list(boxes)) == 1.0


def test_alpha_empty_annotations_agree():
    assert krippendorff_alpha([], []) == 1.0


def test_alpha_disjoint_annotations():
    a = [obj(Box(0, 0, 10, 10), "Table")]
    b = [obj(Box(500, 500, 510, 510), "Table")]
    assert krippendorff_alpha(a, b) == 0.0
    assert krippendorff_alpha(a, []) == 0.0


def test_alpha_mixed_fixture():
    # two matched units (one agreeing, one label clash) plus one
    # unmatched box: D_o = 2/3, D_e = 13/15, alpha = 3/13
    shared1, shared2 = Box(0, 0, 20, 20), Box(100, 0, 120, 20)
    a = [
        obj(shared1, "Table"),
        obj(shared2, "Row"),
        obj(Box(300, 300, 320, 320), "Row"),
    ]
    b = [obj(shared1, "Table"), obj(shared2, "Column")]
    assert krippendorff_alpha(a, b) == pytest.approx(3 / 13, abs=1e-12)


def test_alpha_threshold_is_strict():
    a = [obj(Box(0, 0, 10, 10), "Table")]
    b = [obj(Box(0, 0, 10, 5), "Table")]  # IoU exactly 0.5
    assert krippendorff_alpha(a, b, iou_threshold=0.5) == 0.0
    assert krippendorff_alpha(a, b, iou_threshold=0.49) == 1.0


def test_alpha_respects_pages():
    a = [obj(Box(0, 0, 10, 10), "Table", page=0)]
    b = [obj(Box(0, 0, 10, 10), "Table", page=1)]
    assert krippendorff_alpha(a, b) == 0.0


def test_alpha_is_symmetric():
    rng = random.Random(17)
    for _ in range(50):
        def annotation():
            out = []
            for _ in range(rng.randint(0, 6)):
                x, y = rng.randint(0, 200), rng.randint(0, 200)
                out.append(
                    obj(
                        Box(x, y, x + rng.randint(10, 60), y + rng.randint(10, 60)),
                        rng.choice(("Table", "Row", "Column")),
                        1.0,
                        rng.randint(0, 1),
                    )
                )
            return out

        a, b = annotation(), annotation()
        assert krippendorff_alpha(a, b) == pytest.approx(
            krippendorff_alpha(b, a), abs=1e-12
        )


def test_alpha_in_unit_interval():
    rng = random.Random(23)
    for _ in range(50):
        a = [
            obj(
                Box(x, 0, x + 30, 30),
                rng.choice(("Table", "Row")),
            )
            for x in rng.sample(range(0, 400, 10), rng.randint(0, 8))
        ]
        b = [
            obj(
                Box(x + rng.randint(-5, 5), 0, x + 30 + rng.randint(-5, 5), 30),
                rng.choice(("Table", "Row")),
            )
            for x in rng.sample(range(0, 400, 10), rng.randint(0, 8))
        ]
        alpha = krippendorff_alpha(a, b)
        assert 0.0 <= alpha <= 1.0


# --- classifier F1 ---------------------------------------------------------------


def test_classifier_f1_fixture():
    y_true = ["A", "A", "B", "B", "C"]
    y_pred = ["A", "B", "B", "B", "C"]
    scores, macro = classifier_f1(y_true, y_pred)
    assert scores["A"] == pytest.approx(2 / 3)
    assert scores["B"] == pytest.approx(4 / 5)
    assert scores["C"] == 1.0
    assert macro == pytest.approx((2 / 3 + 4 / 5 + 1.0) / 3)


def test_classifier_f1_perfect_and_absent_classes():
    scores, macro = classifier_f1(["A", "B"], ["A", "A"])
    assert scores["A"] == pytest.approx(2 / 3)
    assert scores["B"] == 0.0
    assert macro == pytest.approx(1 / 3)
    assert classifier_f1(["A"], ["A"]) == ({"A": 1.0}, 1.0)


def test_classifier_f1_rejects_length_mismatch():
    with pytest.raises(ValueError):
        classifier_f1(["A"], ["A", "B"])
