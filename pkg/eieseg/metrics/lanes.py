"""
Lane metrics

Lanes are described by one column per sampled row (LanePoints). Per-lane
probability maps are reduced to points by taking the center of the
foreground run in every row.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..common.errors import DimensionError
from ..common.models import Field2D, LanePoints


def lane_coordinates(prob: Field2D, threshold: float = 0.5) -> LanePoints:
    """
    Row-center points of a single-lane probability map

    Per row, S = {columns with prob > threshold}; the row is missing when S
    is empty, otherwise the point is floor((min S + max S) / 2).
    """
    lane: List[Optional[int]] = []
    for row in prob.values:
        cols = np.flatnonzero(row > threshold)
        lane.append(None if cols.size == 0 else (int(cols[0]) + int(cols[-1])) // 2)
    return LanePoints(rows=list(range(prob.height)), lanes=[lane])


def stack_lanes(points: Sequence[LanePoints]) -> LanePoints:
    """Merge single-lane LanePoints sampled on the same rows"""
    if not points:
        return LanePoints(rows=[], lanes=[])
    rows = points[0].rows
    for p in points:
        if p.rows != rows:
            raise DimensionError("lane point sets are sampled on different rows")
    return LanePoints(rows=rows, lanes=[lane for p in points for lane in p.lanes])


def _lane_accuracy(pred: dict, gt: dict, tol_px: int) -> Tuple[int, int]:
    correct = sum(1 for r, c in gt.items() if r in pred and abs(pred[r] - c) <= tol_px)
    return correct, len(gt)


def tusimple_accuracy(pred: LanePoints, gt: LanePoints, tol_px: int = 5) -> float:
    """
    Correct predicted points / gt points

    Lane i of pred is compared with lane i of gt (use match_lanes first).
    A point is correct when it exists at the gt row within tol_px columns.
    Returns 1.0 when gt has no points.
    """
    correct = 0
    total = 0
    for i in range(len(gt.lanes)):
        pred_lane = pred.lane_map(i) if i < len(pred.lanes) else {}
        hit, count = _lane_accuracy(pred_lane, gt.lane_map(i), tol_px)
        correct += hit
        total += count
    return 1.0 if total == 0 else correct / total


def lane_distance(pred: dict, gt: dict) -> float:
    """Mean |col_pred − col_gt| over rows both lanes cover; inf without overlap"""
    shared = [r for r in gt if r in pred]
    if not shared:
        return math.inf
    return math.fsum(abs(pred[r] - gt[r]) for r in shared) / len(shared)


def lane_assignment(pred: LanePoints, gt: LanePoints) -> List[Tuple[int, int]]:
    """Greedy one-to-one (pred, gt) pairs in order of increasing lane distance"""
    candidates = []
    for i in range(len(pred.lanes)):
        pred_lane = pred.lane_map(i)
        for j in range(len(gt.lanes)):
            distance = lane_distance(pred_lane, gt.lane_map(j))
            if math.isfinite(distance):
                candidates.append((distance, i, j))
    candidates.sort()

    used_pred, used_gt, pairs = set(), set(), []
    for _, i, j in candidates:
        if i in used_pred or j in used_gt:
            continue
        used_pred.add(i)
        used_gt.add(j)
        pairs.append((i, j))
    return pairs


def match_lanes(pred: LanePoints, gt: LanePoints) -> LanePoints:
    """
    Reorder predicted lanes to line up with gt lanes

    Returns LanePoints on gt's rows where lane j is the prediction matched to
    gt lane j; unmatched gt lanes receive an all-missing lane.
    """
    matched = {j: i for i, j in lane_assignment(pred, gt)}
    lanes: List[List[Optional[int]]] = []
    for j in range(len(gt.lanes)):
        if j in matched:
            source = pred.lane_map(matched[j])
            lanes.append([source.get(r) for r in gt.rows])
        else:
            lanes.append([None] * len(gt.rows))
    return LanePoints(rows=list(gt.rows), lanes=lanes)


def tusimple_lane_rates(
    pred: LanePoints,
    gt: LanePoints,
    tol_px: int = 5,
    lane_accuracy: float = 0.85
) -> Tuple[float, float]:
    """
    Lane-level false-positive and false-negative rates

    A matched lane is correct when its point accuracy reaches lane_accuracy.

    Returns:
        (FP, FN) with FP = wrong predicted lanes / predicted lanes and
        FN = missed gt lanes / gt lanes (0 when the denominator is 0)
    """
    correct = 0
    for i, j in lane_assignment(pred, gt):
        hit, count = _lane_accuracy(pred.lane_map(i), gt.lane_map(j), tol_px)
        if count and hit / count >= lane_accuracy:
            correct += 1
    predicted = len(pred.lanes)
    actual = len(gt.lanes)
    fp = (predicted - correct) / predicted if predicted else 0.0
    fn = (actual - correct) / actual if actual else 0.0
    return fp, fn


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = int(np.sum(a | b))
    return 0.0 if union == 0 else int(np.sum(a & b)) / union


def lane_match_counts(
    pred_masks: Sequence[np.ndarray],
    gt_masks: Sequence[np.ndarray],
    iou_threshold: float = 0.5
) -> Tuple[int, int, int]:
    """
    Greedy one-to-one matching of lane masks by IoU

    Returns:
        (TP, FP, FN)
    """
    pred_masks = [np.asarray(m, dtype=bool) for m in pred_masks]
    gt_masks = [np.asarray(m, dtype=bool) for m in gt_masks]
    shapes = {m.shape for m in pred_masks + gt_masks}
    if len(shapes) > 1:
        raise DimensionError(f"lane masks have mismatched grids: {sorted(shapes)}")

    candidates = []
    for i, p in enumerate(pred_masks):
        for j, g in enumerate(gt_masks):
            iou = mask_iou(p, g)
            if iou >= iou_threshold:
                candidates.append((-iou, i, j))
    candidates.sort()

    used_pred, used_gt = set(), set()
    for _, i, j in candidates:
        if i in used_pred or j in used_gt:
            continue
        used_pred.add(i)
        used_gt.add(j)
    tp = len(used_pred)
    return tp, len(pred_masks) - tp, len(gt_masks) - tp


def lane_f1(
    pred_masks: Sequence[np.ndarray],
    gt_masks: Sequence[np.ndarray],
    iou_threshold: float = 0.5
) -> float:
    """
    Lane F1 at a mask-IoU threshold

    Pixel-mask approximation of the curve-width protocol. Returns 1.0 when
    there are no lanes on either side.
    """
    tp, fp, fn = lane_match_counts(pred_masks, gt_masks, iou_threshold)
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)
