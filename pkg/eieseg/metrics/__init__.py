"""Metrics calculation system"""
from .base import BaseMetric, MetricRegistry
from .implementations import (
    LaneF1Metric,
    MeanIoUMetric,
    PixelAccuracyMetric,
    PixelF1Metric,
    TuSimpleMetric,
)
from .lanes import (
    lane_coordinates,
    lane_f1,
    match_lanes,
    tusimple_accuracy,
    tusimple_lane_rates,
)
from .segmentation import (
    confusion_counts,
    iou_from_counts,
    iou_scores,
    pixel_accuracy,
    pixel_f1,
)


def default_registry() -> MetricRegistry:
    """Registry holding every bundled metric with settings-driven defaults"""
    registry = MetricRegistry()
    registry.register(MeanIoUMetric())
    registry.register(PixelAccuracyMetric())
    registry.register(PixelF1Metric())
    registry.register(TuSimpleMetric())
    registry.register(LaneF1Metric())
    return registry


# Register default metrics
registry = default_registry()

__all__ = [
    "BaseMetric",
    "MetricRegistry",
    "registry",
    "default_registry",
    "MeanIoUMetric",
    "PixelAccuracyMetric",
    "PixelF1Metric",
    "TuSimpleMetric",
    "LaneF1Metric",
    "confusion_counts",
    "iou_from_counts",
    "iou_scores",
    "pixel_accuracy",
    "pixel_f1",
    "lane_coordinates",
    "lane_f1",
    "match_lanes",
    "tusimple_accuracy",
    "tusimple_lane_rates",
]
