"""Field-core operations: resampling, one-hot labels, connected components"""
from .core import (
    connected_components,
    downsample_bilinear,
    downsample_labels,
    one_hot,
    require_same_shape,
)

__all__ = [
    "connected_components",
    "downsample_bilinear",
    "downsample_labels",
    "one_hot",
    "require_same_shape",
]
