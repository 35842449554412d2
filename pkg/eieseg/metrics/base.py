"""
Base metric interface for pluggable metrics system

All metrics implement the BaseMetric interface and can be registered dynamically
"""
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..common.models import MetricResult

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class BaseMetric(ABC):
    """Base class for all metrics"""

    @property
    @abstractmethod
    def name(self) -> str:
        """Metric name (unique identifier)"""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """Human-readable description"""
        pass

    @property
    def file_formats(self) -> str:
        """Expected --pred/--gt file formats, shown in CLI help"""
        return ""

    @abstractmethod
    def load(self, pred_path: PathLike, gt_path: PathLike) -> Tuple[Any, Any]:
        """
        Read prediction and ground truth from disk

        Raises:
            FormatError: If either file has the wrong format
        """
        pass

    @abstractmethod
    def calculate(self, pred: Any, gt: Any) -> MetricResult:
        """
        Calculate metric from loaded inputs

        Args:
            pred: Prediction, as returned by load
            gt: Ground truth, as returned by load

        Returns:
            MetricResult with calculated value and metadata
        """
        pass

    def evaluate(self, pred_path: PathLike, gt_path: PathLike) -> MetricResult:
        """Load both files and calculate"""
        pred, gt = self.load(pred_path, gt_path)
        return self.calculate(pred, gt)


class MetricRegistry:
    """Registry for managing metrics"""

    def __init__(self):
        """Initialize empty registry"""
        self._metrics: Dict[str, BaseMetric] = {}

    def register(self, metric: BaseMetric):
        """
        Register a metric

        Args:
            metric: Metric instance to register
        """
        self._metrics[metric.name] = metric

    def unregister(self, name: str):
        """
        Unregister a metric

        Args:
            name: Metric name to remove
        """
        self._metrics.pop(name, None)

    def get(self, name: str) -> Optional[BaseMetric]:
        """
        Get metric by name

        Args:
            name: Metric name

        Returns:
            Metric instance or None
        """
        return self._metrics.get(name)

    def list_metrics(self) -> List[str]:
        """
        List all registered metrics

        Returns:
            List of metric names
        """
        return list(self._metrics.keys())

    def evaluate_all(
        self,
        names: List[str],
        pred_path: PathLike,
        gt_path: PathLike
    ) -> Dict[str, MetricResult]:
        """
        Evaluate several metrics on one file pair

        Args:
            names: Registered metric names
            pred_path: Prediction file
            gt_path: Ground-truth file

        Returns:
            Dictionary mapping metric name to result

        Raises:
            KeyError: Unknown metric name
        """
        results = {}
        for name in names:
            metric = self.get(name)
            if metric is None:
                raise KeyError(f"unknown metric {name!r}; choose from {self.list_metrics()}")
            results[name] = metric.evaluate(pred_path, gt_path)
            logger.debug("%s = %s", name, results[name].value)
        return results
