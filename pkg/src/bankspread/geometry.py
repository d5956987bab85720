"""Axis-aligned box geometry and detection losses.

Boxes are (x1, y1, x2, y2) in pixels with the origin at the page's
top-left corner and y growing downward. The module provides:

  1. ``Box``, an immutable value type with the usual derived quantities.
  2. The IoU-family regression losses: ``giou_loss`` (1 - IoU plus the
     normalized area of the enclosing box not covered by the union),
     ``diou_loss`` (1 - IoU plus squared center distance over squared
     enclosing-box diagonal) and ``ciou_loss`` (DIoU plus an
     aspect-ratio consistency term).
  3. ``set_prediction_loss``, the set-based detection loss: optimal
     one-to-one assignment of targets to predictions over a pairwise
     cost matrix, cross-entropy against a trailing no-object class for
     unmatched predictions.
  4. Greedy class-aware non-maximum suppression.

Everything here is pure and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, TypeVar

from scipy.optimize import linear_sum_assignment

# Floor for probabilities before taking logs so a zero score yields a
# large finite cost instead of breaking the assignment solver.
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned rectangle, x1 <= x2 and y1 <= y2. Zero area is legal."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (self.x1 <= self.x2 and self.y1 <= self.y2):
            raise ValueError(
                f"box corners out of order: ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def translate(self, dx: float, dy: float) -> "Box":
        return Box(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def clamp(self, x_min: float, y_min: float, x_max: float, y_max: float) -> "Box":
        """Clamp all corners into the given bounds. Never grows the box."""
        return Box(
            min(max(self.x1, x_min), x_max),
            min(max(self.y1, y_min), y_max),
            min(max(self.x2, x_min), x_max),
            min(max(self.y2, y_min), y_max),
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def intersection_area(a: Box, b: Box) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def union_area(a: Box, b: Box) -> float:
    return a.area + b.area - intersection_area(a, b)


def enclosing_box(a: Box, b: Box) -> Box:
    return Box(min(a.x1, b.x1), min(a.y1, b.y1), max(a.x2, b.x2), max(a.y2, b.y2))


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0.0 when the union is empty. Total in [0, 1]."""
    u = union_area(a, b)
    if u <= 0:
        return 0.0
    return intersection_area(a, b) / u


def containment_ratio(inner: Box, outer: Box) -> float:
    """Fraction of ``inner``'s area covered by ``outer``; 0.0 for a zero-area inner."""
    if inner.area <= 0:
        return 0.0
    return intersection_area(inner, outer) / inner.area


def _require_positive_areas(b: Box, b_gt: Box, name: str) -> None:
    if b.area <= 0 or b_gt.area <= 0:
        raise ValueError(f"{name} requires boxes with positive area")


def giou_loss(b: Box, b_gt: Box) -> float:
    """Generalized-IoU loss: 1 - IoU + |C \\ (B u Bgt)| / |C|.

    C is the smallest box enclosing both inputs. Lies in [0, 2), is 0
    exactly for identical boxes and stays informative for disjoint pairs
    where plain IoU saturates at 0.
    """
    _require_positive_areas(b, b_gt, "giou_loss")
    u = union_area(b, b_gt)
    c = enclosing_box(b, b_gt).area
    return 1.0 - intersection_area(b, b_gt) / u + (c - u) / c


def diou_loss(b: Box, b_gt: Box) -> float:
    """Distance-IoU loss: 1 - IoU + p^2(b, b_gt) / c^2.

    p is the distance between box centers and c the diagonal of the
    smallest enclosing box, so the penalty is scale invariant.
    """
    _require_positive_areas(b, b_gt, "diou_loss")
    cx_a, cy_a = b.center
    cx_b, cy_b = b_gt.center
    p2 = (cx_a - cx_b) ** 2 + (cy_a - cy_b) ** 2
    enc = enclosing_box(b, b_gt)
    c2 = enc.width**2 + enc.height**2
    return 1.0 - iou(b, b_gt) + p2 / c2


def ciou_loss(b: Box, b_gt: Box) -> float:
    """Complete-IoU loss: DIoU plus alpha * v, the aspect-ratio penalty.

    v = (4 / pi^2) * (atan(w_gt / h_gt) - atan(w / h))^2 and
    alpha = v / ((1 - IoU) + v), with alpha taken as 0 when v is 0 so
    identical boxes score exactly 0.
    """
    _require_positive_areas(b, b_gt, "ciou_loss")
    v = (4.0 / math.pi**2) * (
        math.atan(b_gt.width / b_gt.height) - math.atan(b.width / b.height)
    ) ** 2
    if v == 0.0:
        return diou_loss(b, b_gt)
    alpha = v / ((1.0 - iou(b, b_gt)) + v)
    return diou_loss(b, b_gt) + alpha * v


class BoxLossVariant(Enum):
    GIOU = "giou"
    DIOU = "diou"
    CIOU = "ciou"


_BOX_LOSS = {
    BoxLossVariant.GIOU: giou_loss,
    BoxLossVariant.DIOU: diou_loss,
    BoxLossVariant.CIOU: ciou_loss,
}


@dataclass(frozen=True)
class LossWeights:
    """Weights of the three detection loss terms plus the box-loss variant.

    The defaults (1, 5, 2) are the tuned operating point for both
    detection stages; only the box variant differs between them.
    """

    lambda_ce: float = 1.0
    lambda_l1: float = 5.0
    lambda_box: float = 2.0
    variant: BoxLossVariant = BoxLossVariant.GIOU

    def __post_init__(self) -> None:
        if min(self.lambda_ce, self.lambda_l1, self.lambda_box) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class Prediction:
    """One query's output: a box normalized to [0, 1] and a score vector.

    ``class_scores`` is a probability distribution over the real classes
    followed by one trailing no-object entry.
    """

    box: Box
    class_scores: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.class_scores) < 2:
            raise ValueError("score vector needs at least one class plus no-object")
        if min(self.class_scores) < 0:
            raise ValueError("class scores must be non-negative")
        if abs(sum(self.class_scores) - 1.0) > 1e-9:
            raise ValueError("class scores must sum to 1")


def _check_normalized(box: Box, what: str) -> None:
    if min(box.x1, box.y1) < 0 or max(box.x2, box.y2) > 1:
        raise ValueError(f"{what} box must be normalized to [0, 1]: {box.as_tuple()}")


def _l1(a: Box, b: Box) -> float:
    return (
        abs(a.x1 - b.x1) + abs(a.y1 - b.y1) + abs(a.x2 - b.x2) + abs(a.y2 - b.y2)
    )


def _pair_cost(pred: Prediction, cls: int, box: Box, weights: LossWeights) -> float:
    ce = -math.log(max(pred.class_scores[cls], _LOG_FLOOR))
    box_term = _BOX_LOSS[weights.variant](pred.box, box)
    return (
        weights.lambda_ce * ce
        + weights.lambda_l1 * _l1(pred.box, box)
        + weights.lambda_box * box_term
    )


def set_prediction_loss(
    preds: Sequence[Prediction],
    targets: Sequence[tuple[int, Box]],
    weights: LossWeights,
) -> float:
    """Set-based detection loss under the optimal one-to-one assignment.

    Each matched (target, prediction) pair contributes the weighted sum of
    cross-entropy, L1 box distance and the configured IoU-family loss;
    the matching itself minimizes that same cost over the full pair
    matrix. Predictions left unmatched contribute lambda_ce times the
    cross-entropy against the trailing no-object class.

    Raises ValueError when there are more targets than predictions, on a
    malformed score vector, or on a target class index outside the real
    (non-no-object) range.
    """
    if len(targets) > len(preds):
        raise ValueError("more targets than predictions")
    if not preds:
        return 0.0
    n_scores = len(preds[0].class_scores)
    for p in preds:
        if len(p.class_scores) != n_scores:
            raise ValueError("inconsistent score vector lengths")
        _check_normalized(p.box, "prediction")
    no_object = n_scores - 1
    for cls, box in targets:
        if not (0 <= cls < no_object):
            raise ValueError(f"target class {cls} outside [0, {no_object})")
        _check_normalized(box, "target")

    matched: dict[int, float] = {}
    if targets:
        cost = [
            [_pair_cost(p, cls, box, weights) for p in preds] for cls, box in targets
        ]
        rows, cols = linear_sum_assignment(cost)
        matched = {int(j): cost[int(i)][int(j)] for i, j in zip(rows, cols)}

    total = sum(matched.values())
    for j, p in enumerate(preds):
        if j not in matched:
            total += weights.lambda_ce * -math.log(
                max(p.class_scores[no_object], _LOG_FLOOR)
            )
    return total


_T = TypeVar("_T")


def nms(objects: Sequence[_T], iou_threshold: float) -> list[_T]:
    """Greedy class-aware non-maximum suppression.

    ``objects`` expose ``box``, ``label`` and ``score`` (see
    docmodel.DetectedObject). Objects are visited per label in
    descending score order, ties broken by (y1, x1, x2, y2); a visited
    object is kept unless some already-kept object of the same label
    overlaps it with IoU strictly above the threshold. The survivors
    come back in the same global order, so nms is idempotent.
    """
    if not (0 < iou_threshold <= 1):
        raise ValueError("iou_threshold must lie in (0, 1]")
    ordered = sorted(
        objects,
        key=lambda o: (-o.score, o.box.y1, o.box.x1, o.box.x2, o.box.y2),
    )
    kept: list[_T] = []
    for cand in ordered:
        if all(
            cand.label != k.label or iou(cand.box, k.box) <= iou_threshold
            for k in kept
        ):
            kept.append(cand)
    return kept
