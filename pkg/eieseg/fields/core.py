"""
Field-core operations

Resampling, one-hot label construction and connected-component labelling on
Field2D / LabelStack values. All functions are pure.
"""
import logging
from typing import Tuple, Union

import numpy as np
from scipy import ndimage

from ..common.errors import DimensionError
from ..common.models import Field2D, LabelStack, _Stack

logger = logging.getLogger(__name__)

Shaped = Union[Field2D, _Stack]

# 4-connectivity: diagonal neighbours are separate components
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def require_same_shape(*items: Shaped, what: str = "inputs") -> Tuple[int, int]:
    """
    Check that every field/stack shares one h×w grid

    Returns:
        The shared (height, width)

    Raises:
        DimensionError: If any grid differs
    """
    shapes = {item.shape for item in items}
    if len(shapes) != 1:
        raise DimensionError(f"{what} have mismatched grids: {sorted(shapes)}")
    return shapes.pop()


def _block_centers(n: int, s: int) -> np.ndarray:
    return np.arange(n // s, dtype=np.float64) * s + (s - 1) / 2.0


def downsample_bilinear(field: Field2D, s: int) -> Field2D:
    """
    Down-scale by an integer factor with linear interpolation

    Each output pixel is the bilinear interpolation of the source at the
    center of its s×s block.

    Args:
        field: Source field
        s: Scale factor, must divide both height and width

    Returns:
        (h/s)×(w/s) field

    Raises:
        DimensionError: If s does not divide the grid
    """
    if s < 1 or field.height % s or field.width % s:
        raise DimensionError(f"scale {s} does not divide grid {field.height}x{field.width}")
    if s == 1:
        return Field2D(values=field.values)

    rows = _block_centers(field.height, s)
    cols = _block_centers(field.width, s)
    grid = np.meshgrid(rows, cols, indexing="ij")
    values = ndimage.map_coordinates(field.values, grid, order=1, mode="nearest")
    return Field2D(values=values)


def one_hot(class_map: np.ndarray, classes: int, ignore_index: int = 255) -> LabelStack:
    """
    Convert an integer class map into a LabelStack

    Pixels equal to ignore_index become all-zero rows flagged in the ignore mask.

    Raises:
        DimensionError: If a non-ignored label falls outside [0, classes)
    """
    class_map = np.asarray(class_map)
    if class_map.ndim != 2:
        raise DimensionError(f"class map must be 2D, got shape {class_map.shape}")
    ignored = class_map == ignore_index
    valid = class_map[~ignored]
    if valid.size and (valid.min() < 0 or valid.max() >= classes):
        raise DimensionError(
            f"labels outside [0, {classes}) found: min {valid.min()}, max {valid.max()}"
        )
    values = np.zeros((classes,) + class_map.shape)
    for c in range(classes):
        values[c] = (class_map == c) & ~ignored
    return LabelStack(values=values, ignore_mask=ignored if ignored.any() else None)


def downsample_labels(labels: LabelStack, s: int) -> LabelStack:
    """
    Down-scale one-hot labels by interpolating each layer and taking the argmax

    Output pixels whose interpolated ignore weight beats every class stay ignored.
    """
    layers = [downsample_bilinear(f, s).values for f in labels.fields]
    stacked = np.stack(layers)
    ignore = downsample_bilinear(Field2D(values=labels.ignored.astype(np.float64)), s).values
    class_map = np.argmax(stacked, axis=0)
    class_map[ignore > stacked.max(axis=0)] = -1
    return one_hot(class_map, labels.classes, ignore_index=-1)


def connected_components(mask: Field2D, threshold: float = 0.5) -> Tuple[int, np.ndarray]:
    """
    Label 4-connected components of {value > threshold}

    Args:
        mask: Field to threshold
        threshold: Strict foreground threshold

    Returns:
        (component count, int label field) with background 0 and components
        numbered 1..K in raster first-encounter order
    """
    labels, count = ndimage.label(mask.values > threshold, structure=FOUR_CONNECTED)
    return int(count), labels
