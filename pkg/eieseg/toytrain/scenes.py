"""
Synthetic training scenes

Three scene kinds on a textured dark background:

    lanes   2–4 bright near-parallel curves, 1–3 px wide, partly hidden by
            occlusion boxes (classes: background, lane)
    blobs   3–8 medium-intensity random-walk regions of at most 40 px
            (classes: background, blob)
    mixed   1–2 one-pixel lanes plus 3–4 blobs of at most 16 px with a
            heavy background majority (classes: background, thin, blob)

Occlusion boxes repaint the image with background texture but keep the
labels, so the structure must be inferred from its visible parts.
"""
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from scipy import ndimage

from ..common.errors import DimensionError
from ..common.models import Box, Field2D, SyntheticScene
from ..common.rng import stream
from ..fields.core import FOUR_CONNECTED, one_hot
from ..storage.tensor_files import write_pgm, write_tensor

logger = logging.getLogger(__name__)

SCENE_CLASSES: Dict[str, int] = {"lanes": 2, "blobs": 2, "mixed": 3}
BACKGROUND = 0
THIN_CLASS = 1
MIXED_BLOB_CLASS = 2

MIN_SIZE = 16
MIXED_IMBALANCE = 20  # background : thin pixels
MIXED_BLOB_MAX = 16
BLOB_MAX = 40

_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))


def _background(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    return rng.uniform(0.15, 0.35, size=(h, w))


def _lane_offsets(rng: np.random.Generator, count: int, h: int, w: int) -> List[Tuple[float, float]]:
    """(center column at mid-height, slope) per lane, evenly spaced"""
    shared_slope = rng.uniform(-0.1, 0.1)
    spacing = w / (count + 1)
    lanes = []
    for i in range(count):
        center = spacing * (i + 1) + rng.uniform(-0.5, 0.5)
        slope = shared_slope + rng.uniform(-0.5, 0.5) / h
        lanes.append((center, slope))
    return lanes


def lane_bend(rng: np.random.Generator, h: int) -> np.ndarray:
    """
    Sideways offset per row shared by every lane of a scene

    A sine of amplitude 0.5–1.5 px whose period spans one to two image
    heights, so each lane curves while lane spacing stays fixed.
    """
    amplitude = rng.uniform(0.5, 1.5)
    period = rng.uniform(h, 2.0 * h)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return amplitude * np.sin(2.0 * np.pi * np.arange(h) / period + phase)


def _draw_lane(
    h: int,
    w: int,
    center: float,
    slope: float,
    bend: np.ndarray,
    width: int,
    rows: range
) -> np.ndarray:
    """Mask with exactly `width` pixels per covered row (clipped at the borders)"""
    mask = np.zeros((h, w), dtype=bool)
    for r in rows:
        c = center + slope * (r - h / 2.0) + bend[r]
        start = int(np.rint(c - (width - 1) / 2.0))
        lo, hi = max(start, 0), min(start + width, w)
        if lo < hi:
            mask[r, lo:hi] = True
    return mask


def _occlusion_box(rng: np.random.Generator, lane: np.ndarray) -> Box:
    """Box of 4–7 rows over a visible stretch of one lane"""
    h, w = lane.shape
    lane_rows = np.flatnonzero(lane.any(axis=1))
    height = int(rng.integers(4, 8))
    first, last = int(lane_rows[0]), int(lane_rows[-1])
    top = int(rng.integers(first, max(first + 1, last - height + 2)))
    bottom = min(top + height, h)
    cols = np.flatnonzero(lane[top:bottom].any(axis=0))
    if cols.size == 0:
        cols = np.flatnonzero(lane.any(axis=0))
    left = max(int(cols[0]) - 1, 0)
    right = min(int(cols[-1]) + 2, w)
    return Box(top=top, left=left, bottom=bottom, right=right)


def _random_walk(rng: np.random.Generator, free: np.ndarray, size: int) -> np.ndarray:
    """Connected region grown by a random walk restricted to free pixels"""
    region = np.zeros_like(free)
    candidates = np.argwhere(free)
    if len(candidates) == 0:
        return region
    y, x = candidates[int(rng.integers(len(candidates)))]
    region[y, x] = True
    count = 1
    h, w = free.shape
    for _ in range(size * 25):
        if count >= size:
            break
        dy, dx = _MOVES[int(rng.integers(4))]
        ny, nx = y + dy, x + dx
        if 0 <= ny < h and 0 <= nx < w and free[ny, nx]:
            y, x = ny, nx
            if not region[y, x]:
                region[y, x] = True
                count += 1
    return region


def _place_blobs(
    rng: np.random.Generator,
    occupied: np.ndarray,
    count: int,
    max_size: int
) -> List[np.ndarray]:
    """Blobs that never touch each other or earlier structure (4-connectivity)"""
    blobs = []
    occupied = occupied.copy()
    for _ in range(count):
        free = ~ndimage.binary_dilation(occupied, structure=FOUR_CONNECTED)
        blob = _random_walk(rng, free, int(rng.integers(max_size // 2, max_size + 1)))
        if blob.any():
            blobs.append(blob)
            occupied |= blob
    return blobs


def _paint(image: np.ndarray, mask: np.ndarray, rng: np.random.Generator, low: float, high: float):
    level = rng.uniform(low, high)
    noise = rng.uniform(-0.03, 0.03, size=image.shape)
    image[mask] = np.clip(level + noise[mask], 0.0, 1.0)


def _lanes_scene(rng: np.random.Generator, h: int, w: int) -> Tuple[np.ndarray, np.ndarray, List[Box]]:
    image = _background(rng, h, w)
    texture = image.copy()
    class_map = np.zeros((h, w), dtype=np.int64)

    count = int(rng.integers(2, 5))
    count = min(count, max(2, (w - 4) // 7))
    bend = lane_bend(rng, h)
    lanes = []
    for center, slope in _lane_offsets(rng, count, h, w):
        lane = _draw_lane(h, w, center, slope, bend, int(rng.integers(1, 4)), range(h))
        lanes.append(lane)
        _paint(image, lane, rng, 0.75, 0.95)
        class_map[lane] = THIN_CLASS

    boxes = [_occlusion_box(rng, lanes[int(rng.integers(len(lanes)))]) for _ in range(int(rng.integers(1, 3)))]
    for box in boxes:
        image[box.slices] = texture[box.slices]
    return image, class_map, boxes


def _blobs_scene(rng: np.random.Generator, h: int, w: int) -> Tuple[np.ndarray, np.ndarray, List[Box]]:
    image = _background(rng, h, w)
    class_map = np.zeros((h, w), dtype=np.int64)
    for blob in _place_blobs(rng, np.zeros((h, w), dtype=bool), int(rng.integers(3, 9)), BLOB_MAX):
        _paint(image, blob, rng, 0.55, 0.65)
        class_map[blob] = 1
    return image, class_map, []


def _mixed_scene(rng: np.random.Generator, h: int, w: int) -> Tuple[np.ndarray, np.ndarray, List[Box]]:
    image = _background(rng, h, w)
    texture = image.copy()
    class_map = np.zeros((h, w), dtype=np.int64)

    # blobs cover at most 4·16 px, so this many thin pixels keeps the 20:1 ratio
    thin_budget = (h * w - 4 * MIXED_BLOB_MAX) // (MIXED_IMBALANCE + 1)
    count = int(rng.integers(1, 3))
    length = min(h - 4, thin_budget // count)
    bend = lane_bend(rng, h)
    lanes = []
    for center, slope in _lane_offsets(rng, count, h, w):
        top = int(rng.integers(2, h - 2 - length + 1))
        lane = _draw_lane(h, w, center, slope, bend, 1, range(top, top + length))
        lanes.append(lane)
        _paint(image, lane, rng, 0.75, 0.95)
        class_map[lane] = THIN_CLASS

    occupied = class_map > 0
    for blob in _place_blobs(rng, occupied, int(rng.integers(3, 5)), MIXED_BLOB_MAX):
        _paint(image, blob, rng, 0.55, 0.65)
        class_map[blob] = MIXED_BLOB_CLASS

    box = _occlusion_box(rng, lanes[int(rng.integers(len(lanes)))])
    image[box.slices] = texture[box.slices]
    # a box may clip a blob; blob pixels inside keep their label as well
    return image, class_map, [box]


_GENERATORS = {"lanes": _lanes_scene, "blobs": _blobs_scene, "mixed": _mixed_scene}


def generate_scene(kind: str, h: int, w: int, seed: int, split: str = "scene", index: int = 0) -> SyntheticScene:
    """
    Deterministic synthetic scene

    Args:
        kind: "lanes", "blobs" or "mixed"
        h, w: Grid size (both ≥ 16)
        seed: Run seed
        split, index: Stream path, so the i-th train and val scenes differ

    Returns:
        SyntheticScene

    Raises:
        DimensionError: If the grid is smaller than 16×16
        ValueError: Unknown scene kind
    """
    if h < MIN_SIZE or w < MIN_SIZE:
        raise DimensionError(f"scenes need at least {MIN_SIZE}x{MIN_SIZE}, got {h}x{w}")
    if kind not in _GENERATORS:
        raise ValueError(f"unknown scene kind {kind!r}; choose from {sorted(_GENERATORS)}")

    rng = stream(seed, "scene", kind, split, index)
    image, class_map, boxes = _GENERATORS[kind](rng, h, w)
    return SyntheticScene(
        kind=kind,
        image=Field2D(values=image),
        labels=one_hot(class_map, SCENE_CLASSES[kind]),
        occlusion_boxes=boxes
    )


def dump_scene(scene: SyntheticScene, directory: Union[str, Path], name: str) -> List[Path]:
    """
    Write <name>_image.pgm, <name>_labels.fld and <name>_classes.pgm

    The class PGM scales class c to c/(N−1) of full intensity.
    """
    directory = Path(directory)
    class_map = scene.labels.class_map().astype(np.float64)
    scaled = np.clip(class_map, 0, None) / (scene.labels.classes - 1)
    paths = [
        directory / f"{name}_image.pgm",
        directory / f"{name}_labels.fld",
        directory / f"{name}_classes.pgm",
    ]
    write_pgm(paths[0], scene.image)
    write_tensor(paths[1], scene.labels)
    write_pgm(paths[2], Field2D(values=scaled))
    logger.debug("dumped scene %s to %s", name, directory)
    return paths
