"""Evaluation metrics: detection AP/AR, inter-annotator agreement, F1.

``detection_metrics`` follows the standard challenge protocol: per
class, predictions ranked by score are greedily matched (best IoU
first, each ground-truth box used once, matching confined to the
prediction's own image) at the ten IoU thresholds 0.50:0.05:0.95.
AP averages the 101-point interpolated precision; AR averages the
final recall. Both are macro-averaged over classes.

``krippendorff_alpha`` treats two annotators' box sets as codings of
shared units: boxes are paired greedily by descending IoU above the
threshold, each matched pair is one unit coded with both labels, and
every unpaired box is a unit the other annotator coded as "absent".
Nominal-data disagreement then gives alpha = 1 - D_o / D_e, clamped
into [0, 1].

``classifier_f1`` is plain per-class F1 plus the macro average.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .docmodel import DetectedObject
from .geometry import iou

IOU_THRESHOLDS: tuple[float, ...] = tuple((50 + 5 * i) / 100.0 for i in range(10))
_RECALL_POINTS = 101


@dataclass(frozen=True)
class EvalPair:
    """Ground truth and predictions for one image/page."""

    ground_truth: tuple[DetectedObject, ...]
    predictions: tuple[DetectedObject, ...]


def _label_key(label: Hashable) -> str:
    value = getattr(label, "value", None)
    return value if isinstance(value, str) else str(label)


@dataclass(frozen=True)
class DetectionMetrics:
    ap50: float
    ap75: float
    ap: float
    ar: float
    per_class: Mapping[Hashable, Mapping[str, float]]

    def as_dict(self) -> dict:
        return {
            "AP50": self.ap50,
            "AP75": self.ap75,
            "AP": self.ap,
            "AR": self.ar,
            "per_class": {
                _label_key(label): dict(values) for label, values in self.per_class.items()
            },
        }


def _match_class(
    pairs: Sequence[EvalPair], label: Hashable, threshold: float
) -> tuple[list[bool], int]:
    """Greedy matching for one class at one threshold.

    Returns the TP/FP flag per prediction in global score order and the
    ground-truth count. Each prediction takes the highest-IoU unmatched
    ground-truth box of its own image when that IoU reaches the
    threshold; ties go to the earliest box.
    """
    n_gt = 0
    ranked: list[tuple[float, int, int, DetectedObject]] = []
    for pi, pair in enumerate(pairs):
        n_gt += sum(1 for g in pair.ground_truth if g.label == label)
        for j, p in enumerate(pair.predictions):
            if p.label == label:
                ranked.append((-p.score, pi, j, p))
    ranked.sort(key=lambda r: (r[0], r[1], r[2]))

    taken: set[tuple[int, int]] = set()
    flags: list[bool] = []
    for _, pi, _, pred in ranked:
        best_iou = 0.0
        best_gi: int | None = None
        for gi, gt in enumerate(pairs[pi].ground_truth):
            if gt.label != label or (pi, gi) in taken:
                continue
            value = iou(pred.box, gt.box)
            if value >= threshold and value > best_iou:
                best_iou, best_gi = value, gi
        if best_gi is None:
            flags.append(False)
        else:
            taken.add((pi, best_gi))
            flags.append(True)
    return flags, n_gt


def _average_precision(flags: Sequence[bool], n_gt: int) -> tuple[float, float]:
    """(AP, final recall) from ranked TP/FP flags via 101-point interpolation."""
    if n_gt == 0:
        return 0.0, 0.0
    precisions: list[float] = []
    recalls: list[float] = []
    tp = 0
    for k, is_tp in enumerate(flags, start=1):
        if is_tp:
            tp += 1
        precisions.append(tp / k)
        recalls.append(tp / n_gt)
    # precision envelope: best precision at any recall >= r
    for k in range(len(precisions) - 2, -1, -1):
        precisions[k] = max(precisions[k], precisions[k + 1])
    ap = 0.0
    j = 0
    for step in range(_RECALL_POINTS):
        r = step / (_RECALL_POINTS - 1)
        while j < len(recalls) and recalls[j] < r:
            j += 1
        if j < len(precisions):
            ap += precisions[j]
    final_recall = recalls[-1] if recalls else 0.0
    return ap / _RECALL_POINTS, final_recall


def detection_metrics(pairs: Sequence[EvalPair]) -> DetectionMetrics:
    """AP50/AP75/AP/AR macro-averaged over the classes present.

    Classes appearing in the ground truth are scored normally; a class
    with predictions but no ground truth anywhere is defined to score
    zero (penalizing hallucinated classes); classes in neither set do
    not exist for the metric.
    """
    labels: set[Hashable] = set()
    for pair in pairs:
        labels.update(g.label for g in pair.ground_truth)
        labels.update(p.label for p in pair.predictions)
    per_class: dict[Hashable, dict[str, float]] = {}
    for label in sorted(labels, key=str):
        ap_by_threshold: dict[float, float] = {}
        recalls: list[float] = []
        for t in IOU_THRESHOLDS:
            flags, n_gt = _match_class(pairs, label, t)
            ap, final_recall = _average_precision(flags, n_gt)
            ap_by_threshold[t] = ap
            recalls.append(final_recall)
        per_class[label] = {
            "AP50": ap_by_threshold[IOU_THRESHOLDS[0]],
            "AP75": ap_by_threshold[IOU_THRESHOLDS[5]],
            "AP": sum(ap_by_threshold.values()) / len(IOU_THRESHOLDS),
            "AR": sum(recalls) / len(recalls),
        }
    if not per_class:
        return DetectionMetrics(0.0, 0.0, 0.0, 0.0, {})
    n = len(per_class)
    return DetectionMetrics(
        ap50=sum(v["AP50"] for v in per_class.values()) / n,
        ap75=sum(v["AP75"] for v in per_class.values()) / n,
        ap=sum(v["AP"] for v in per_class.values()) / n,
        ar=sum(v["AR"] for v in per_class.values()) / n,
        per_class=per_class,
    )


def krippendorff_alpha(
    annotator_a: Sequence[DetectedObject],
    annotator_b: Sequence[DetectedObject],
    iou_threshold: float = 0.5,
) -> float:
    """Agreement between two annotators' box sets, in [0, 1].

    Boxes on the same page pair up greedily by descending IoU, only
    above the threshold; a matched pair is one unit carrying both
    labels, an unmatched box is a unit whose counterpart value is
    "absent". Nominal disagreement over those units gives
    1 - D_o / D_e, clamped. Two empty sets agree perfectly (1.0); no
    pairs and no label variety means total disagreement (0.0 after the
    clamp).
    """
    if not annotator_a and not annotator_b:
        return 1.0

    candidates = []
    for ia, a in enumerate(annotator_a):
        for ib, b in enumerate(annotator_b):
            if a.page_index != b.page_index:
                continue
            value = iou(a.box, b.box)
            if value > iou_threshold:
                lo, hi = sorted(
                    [
                        (a.box.as_tuple(), str(a.label)),
                        (b.box.as_tuple(), str(b.label)),
                    ]
                )
                candidates.append((-value, lo, hi, ia, ib))
    candidates.sort(key=lambda c: c[:3])
    used_a: set[int] = set()
    used_b: set[int] = set()
    units: list[tuple[str, str]] = []
    _ABSENT = "\x00absent"
    for _, _, _, ia, ib in candidates:
        if ia in used_a or ib in used_b:
            continue
        used_a.add(ia)
        used_b.add(ib)
        units.append((str(annotator_a[ia].label), str(annotator_b[ib].label)))
    for ia, a in enumerate(annotator_a):
        if ia not in used_a:
            units.append((str(a.label), _ABSENT))
    for ib, b in enumerate(annotator_b):
        if ib not in used_b:
            units.append((_ABSENT, str(b.label)))

    observed = sum(1 for va, vb in units if va != vb) / len(units)
    if observed == 0.0:
        return 1.0
    counts = Counter()
    for va, vb in units:
        counts[va] += 1
        counts[vb] += 1
    n_total = 2 * len(units)
    expected = 0.0
    for va, ca in counts.items():
        for vb, cb in counts.items():
            if va != vb:
                expected += ca * cb
    expected /= n_total * (n_total - 1)
    if expected == 0.0:
        return 0.0
    return min(1.0, max(0.0, 1.0 - observed / expected))


def classifier_f1(
    y_true: Sequence[Hashable], y_pred: Sequence[Hashable]
) -> tuple[dict[Hashable, float], float]:
    """Per-class F1 and the macro average over classes present in either list.

    A class with no true positives scores 0. Lengths must agree.
    """
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred must have equal length")
    labels = sorted(set(y_true) | set(y_pred), key=str)
    scores: dict[Hashable, float] = {}
    for label in labels:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == label and p == label)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != label and p == label)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == label and p != label)
        denom = 2 * tp + fp + fn
        scores[label] = (2 * tp / denom) if denom else 0.0
    macro = sum(scores.values()) / len(scores) if scores else 0.0
    return scores, macro
