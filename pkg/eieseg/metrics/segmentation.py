"""
Pixel-level segmentation metrics

Class maps hold the argmax class per pixel. Ground truth comes as a
LabelStack so ignored pixels drop out of every count.
"""
import math
from typing import List, Optional

import numpy as np

from ..common.errors import DimensionError
from ..common.models import ConfusionCounts, IoUReport, LabelStack


def _check_map(pred_labels: np.ndarray, gt: LabelStack) -> np.ndarray:
    pred_labels = np.asarray(pred_labels)
    if pred_labels.shape != gt.shape:
        raise DimensionError(f"prediction grid {pred_labels.shape} does not match labels {gt.shape}")
    return pred_labels


def confusion_counts(pred_labels: np.ndarray, gt: LabelStack) -> ConfusionCounts:
    """Per-class TP/FP/FN over non-ignored pixels"""
    pred_labels = _check_map(pred_labels, gt)
    valid = ~gt.ignored
    truth = gt.class_map()
    tp, fp, fn = [], [], []
    for c in range(gt.classes):
        predicted = (pred_labels == c) & valid
        actual = truth == c
        tp.append(int(np.sum(predicted & actual)))
        fp.append(int(np.sum(predicted & ~actual)))
        fn.append(int(np.sum(~predicted & actual)))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn)


def iou_from_counts(counts: ConfusionCounts) -> IoUReport:
    """
    IoU_c = TP/(TP+FP+FN); classes with an empty union are reported as None
    and left out of the mean (mIoU is NaN when every class is absent)
    """
    per_class: List[Optional[float]] = []
    for tp, fp, fn in zip(counts.tp, counts.fp, counts.fn):
        union = tp + fp + fn
        per_class.append(tp / union if union else None)
    present = [v for v in per_class if v is not None]
    miou = math.fsum(present) / len(present) if present else float("nan")
    return IoUReport(per_class=per_class, miou=miou, counts=counts)


def iou_scores(pred_labels: np.ndarray, gt: LabelStack) -> IoUReport:
    """
    Per-class IoU and mIoU of an argmax class map

    Args:
        pred_labels: h×w integer class map
        gt: One-hot labels (ignored pixels excluded)

    Returns:
        IoUReport
    """
    return iou_from_counts(confusion_counts(pred_labels, gt))


def pixel_accuracy(pred_labels: np.ndarray, gt: LabelStack) -> float:
    """Fraction of non-ignored pixels whose class matches; NaN if none are valid"""
    pred_labels = _check_map(pred_labels, gt)
    valid = ~gt.ignored
    total = int(valid.sum())
    if total == 0:
        return float("nan")
    return float(np.sum((pred_labels == gt.class_map()) & valid) / total)


def pixel_f1(pred_mask: np.ndarray, gt_mask: np.ndarray) -> float:
    """
    F1 of two binary masks

    1.0 when both are empty, 0.0 when exactly one is.
    """
    pred_mask = np.asarray(pred_mask, dtype=bool)
    gt_mask = np.asarray(gt_mask, dtype=bool)
    if pred_mask.shape != gt_mask.shape:
        raise DimensionError(f"mask grids differ: {pred_mask.shape} vs {gt_mask.shape}")

    predicted = int(pred_mask.sum())
    actual = int(gt_mask.sum())
    if predicted == 0 and actual == 0:
        return 1.0
    if predicted == 0 or actual == 0:
        return 0.0
    tp = int(np.sum(pred_mask & gt_mask))
    if tp == 0:
        return 0.0
    precision = tp / predicted
    recall = tp / actual
    return 2.0 * precision * recall / (precision + recall)
