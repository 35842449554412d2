"""
Concrete metric implementations

Each metric is a self-contained, pluggable component
"""
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .base import BaseMetric, PathLike
from .lanes import (
    lane_coordinates,
    lane_f1,
    lane_match_counts,
    match_lanes,
    stack_lanes,
    tusimple_accuracy,
    tusimple_lane_rates,
)
from .segmentation import iou_scores, pixel_accuracy, pixel_f1
from ..common.config import get_config
from ..common.errors import DimensionError, FormatError
from ..common.models import Field2D, LabelStack, LanePoints, MetricResult
from ..storage.reports import read_lane_points_csv
from ..storage.tensor_files import read_labels, read_pgm, read_tensor


def _load_class_map(pred_path: PathLike, gt_path: PathLike) -> Tuple[np.ndarray, LabelStack]:
    scores = read_tensor(pred_path)
    gt = read_labels(gt_path)
    if scores.shape[0] != gt.classes:
        raise DimensionError(f"prediction has {scores.shape[0]} classes but labels have {gt.classes}")
    if scores.shape[1:] != gt.shape:
        raise DimensionError(f"prediction grid {scores.shape[1:]} does not match labels {gt.shape}")
    return np.argmax(scores, axis=0), gt


def _load_mask(path: PathLike, threshold: float) -> np.ndarray:
    if Path(path).suffix.lower() == ".pgm":
        return read_pgm(path).values > 0.5
    tensor = read_tensor(path)
    if tensor.shape[0] != 1:
        raise FormatError(f"expected a single-channel mask, got {tensor.shape[0]} channels", path=path)
    return tensor[0] > threshold


def _load_lane_masks(path: PathLike, threshold: float) -> List[np.ndarray]:
    return [layer > threshold for layer in read_tensor(path)]


class MeanIoUMetric(BaseMetric):
    """Per-class IoU and their unweighted mean"""

    @property
    def name(self) -> str:
        return "miou"

    @property
    def description(self) -> str:
        return "Mean intersection-over-union across classes"

    @property
    def file_formats(self) -> str:
        return "pred: FLD N×H×W class scores (argmax taken); gt: FLD one-hot N×H×W"

    def load(self, pred_path: PathLike, gt_path: PathLike) -> Tuple[np.ndarray, LabelStack]:
        return _load_class_map(pred_path, gt_path)

    def calculate(self, pred: np.ndarray, gt: LabelStack) -> MetricResult:
        report = iou_scores(pred, gt)
        return MetricResult(
            name=self.name,
            value=report.miou,
            metadata={
                "iou": report.per_class,
                "classes": gt.classes,
                "valid_pixels": gt.valid_count
            }
        )


class PixelAccuracyMetric(BaseMetric):
    """Share of correctly classified pixels"""

    @property
    def name(self) -> str:
        return "pixacc"

    @property
    def description(self) -> str:
        return "Pixel accuracy over non-ignored pixels"

    @property
    def file_formats(self) -> str:
        return "same as miou"

    def load(self, pred_path: PathLike, gt_path: PathLike) -> Tuple[np.ndarray, LabelStack]:
        return _load_class_map(pred_path, gt_path)

    def calculate(self, pred: np.ndarray, gt: LabelStack) -> MetricResult:
        return MetricResult(
            name=self.name,
            value=pixel_accuracy(pred, gt),
            metadata={"valid_pixels": gt.valid_count}
        )


class PixelF1Metric(BaseMetric):
    """Pixel-wise F1 of a binary mask"""

    def __init__(self, mask_threshold: Optional[float] = None):
        self.mask_threshold = mask_threshold

    @property
    def name(self) -> str:
        return "pixf1"

    @property
    def description(self) -> str:
        return "Pixel F1 between two binary masks"

    @property
    def file_formats(self) -> str:
        return "pred/gt: PGM masks, or single-channel FLD thresholded at --mask-threshold"

    def _threshold(self) -> float:
        if self.mask_threshold is not None:
            return self.mask_threshold
        return get_config().metrics.mask_threshold

    def load(self, pred_path: PathLike, gt_path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
        threshold = self._threshold()
        pred = _load_mask(pred_path, threshold)
        gt = _load_mask(gt_path, threshold)
        if pred.shape != gt.shape:
            raise DimensionError(f"mask grids differ: {pred.shape} vs {gt.shape}")
        return pred, gt

    def calculate(self, pred: np.ndarray, gt: np.ndarray) -> MetricResult:
        return MetricResult(
            name=self.name,
            value=pixel_f1(pred, gt),
            metadata={
                "pred_pixels": int(np.sum(pred)),
                "gt_pixels": int(np.sum(gt)),
                "overlap": int(np.sum(np.asarray(pred, dtype=bool) & np.asarray(gt, dtype=bool)))
            }
        )


class TuSimpleMetric(BaseMetric):
    """Point accuracy with lane-level FP/FN rates"""

    def __init__(
        self,
        tol_px: Optional[int] = None,
        lane_accuracy: Optional[float] = None,
        mask_threshold: Optional[float] = None
    ):
        self.tol_px = tol_px
        self.lane_accuracy = lane_accuracy
        self.mask_threshold = mask_threshold

    @property
    def name(self) -> str:
        return "tusimple"

    @property
    def description(self) -> str:
        return "Lane point accuracy within a column tolerance"

    @property
    def file_formats(self) -> str:
        return "pred/gt: lane CSV (lane_id,row,col) or FLD with one probability map per lane"

    def _load_points(self, path: PathLike) -> LanePoints:
        if Path(path).suffix.lower() == ".csv":
            return read_lane_points_csv(path)
        threshold = self.mask_threshold
        if threshold is None:
            threshold = get_config().metrics.mask_threshold
        return stack_lanes([
            lane_coordinates(Field2D(values=layer), threshold) for layer in read_tensor(path)
        ])

    def load(self, pred_path: PathLike, gt_path: PathLike) -> Tuple[LanePoints, LanePoints]:
        return self._load_points(pred_path), self._load_points(gt_path)

    def calculate(self, pred: LanePoints, gt: LanePoints) -> MetricResult:
        settings = get_config().metrics
        tol = self.tol_px if self.tol_px is not None else settings.tusimple_tol_px
        lane_accuracy = (
            self.lane_accuracy if self.lane_accuracy is not None else settings.tusimple_lane_accuracy
        )
        accuracy = tusimple_accuracy(match_lanes(pred, gt), gt, tol)
        fp, fn = tusimple_lane_rates(pred, gt, tol, lane_accuracy)
        return MetricResult(
            name=self.name,
            value=accuracy,
            metadata={
                "tol_px": tol,
                "fp": fp,
                "fn": fn,
                "gt_points": gt.point_count,
                "pred_lanes": len(pred.lanes),
                "gt_lanes": len(gt.lanes)
            }
        )


class LaneF1Metric(BaseMetric):
    """Lane F1 by mask-IoU matching"""

    def __init__(self, iou_threshold: Optional[float] = None, mask_threshold: Optional[float] = None):
        self.iou_threshold = iou_threshold
        self.mask_threshold = mask_threshold

    @property
    def name(self) -> str:
        return "lane-f1"

    @property
    def description(self) -> str:
        return "Lane F1 with one-to-one matching at a mask-IoU threshold"

    @property
    def file_formats(self) -> str:
        return "pred/gt: FLD with one map per lane, thresholded at --mask-threshold"

    def load(self, pred_path: PathLike, gt_path: PathLike) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        threshold = self.mask_threshold
        if threshold is None:
            threshold = get_config().metrics.mask_threshold
        return _load_lane_masks(pred_path, threshold), _load_lane_masks(gt_path, threshold)

    def calculate(self, pred: List[np.ndarray], gt: List[np.ndarray]) -> MetricResult:
        threshold = self.iou_threshold
        if threshold is None:
            threshold = get_config().metrics.lane_iou_threshold
        tp, fp, fn = lane_match_counts(pred, gt, threshold)
        return MetricResult(
            name=self.name,
            value=lane_f1(pred, gt, threshold),
            metadata={"iou_threshold": threshold, "tp": tp, "fp": fp, "fn": fn}
        )
