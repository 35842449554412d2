"""
Tensor and mask persistence

FLD tensor files: one line of compact JSON header
    {"dims":[C,H,W],"dtype":"f64","order":"row-major"}
terminated by LF, followed by C·H·W little-endian float64 values.
Single-channel masks are also read from PGM (P2/P5, maxval 255) through Pillow.
"""
import json
import logging
from io import BytesIO
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from ..common.errors import FormatError
from ..common.models import Field2D, LabelStack, LogitStack, _Stack

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
TensorLike = Union[np.ndarray, _Stack, Field2D]

DTYPE = "f64"
ORDER = "row-major"
PGM_MAXVAL = 255
PGM_FOREGROUND = 127  # value > 127 counts as foreground
PGM_MAGIC = (b"P2", b"P5")


def _as_array(tensor: TensorLike) -> np.ndarray:
    if isinstance(tensor, Field2D):
        return tensor.values[np.newaxis]
    if isinstance(tensor, _Stack):
        return tensor.values
    array = np.asarray(tensor, dtype=np.float64)
    if array.ndim == 2:
        array = array[np.newaxis]
    if array.ndim != 3:
        raise FormatError(f"tensor must be 2D or 3D, got shape {array.shape}")
    return array


def encode_tensor(tensor: TensorLike) -> bytes:
    """Serialize a stack (or single field) to FLD bytes"""
    array = _as_array(tensor)
    header = json.dumps(
        {"dims": list(array.shape), "dtype": DTYPE, "order": ORDER},
        separators=(",", ":")
    )
    payload = np.ascontiguousarray(array, dtype="<f8").tobytes()
    return header.encode("ascii") + b"\n" + payload


def decode_tensor(data: bytes, path: Optional[PathLike] = None) -> np.ndarray:
    """
    Parse FLD bytes

    Returns:
        C×H×W float64 array

    Raises:
        FormatError: Malformed header, unknown dtype, truncated or oversized payload
    """
    newline = data.find(b"\n")
    if newline < 0:
        raise FormatError("header is not terminated by LF", offset=len(data), path=path)
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except UnicodeDecodeError as e:
        raise FormatError("header is not valid UTF-8", offset=e.start, path=path) from e
    except json.JSONDecodeError as e:
        raise FormatError(f"header is not valid JSON: {e.msg}", offset=e.pos, path=path) from e

    if not isinstance(header, dict):
        raise FormatError("header must be a JSON object", offset=0, path=path)
    dims = header.get("dims")
    if (
        not isinstance(dims, list)
        or len(dims) != 3
        or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in dims)
    ):
        raise FormatError(f"dims must be three positive integers, got {dims!r}", offset=0, path=path)
    if header.get("dtype") != DTYPE:
        raise FormatError(f"unknown dtype {header.get('dtype')!r}", offset=0, path=path)
    if header.get("order", ORDER) != ORDER:
        raise FormatError(f"unsupported order {header.get('order')!r}", offset=0, path=path)

    start = newline + 1
    expected = dims[0] * dims[1] * dims[2] * 8
    available = len(data) - start
    if available < expected:
        raise FormatError(
            f"truncated payload: expected {expected} bytes, found {available}",
            offset=len(data),
            path=path
        )
    if available > expected:
        raise FormatError(
            f"payload has {available - expected} trailing bytes",
            offset=start + expected,
            path=path
        )
    values = np.frombuffer(data, dtype="<f8", count=expected // 8, offset=start)
    return values.astype(np.float64).reshape(dims)


def write_tensor(path: PathLike, tensor: TensorLike):
    """Write a stack (or single field) as an FLD file"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensor(tensor))
    logger.debug("wrote %s", path)


def read_tensor(path: PathLike) -> np.ndarray:
    """Read an FLD file into a C×H×W array"""
    path = Path(path)
    return decode_tensor(path.read_bytes(), path=path)


def read_logits(path: PathLike) -> LogitStack:
    return LogitStack(values=read_tensor(path))


def labels_from_array(values: np.ndarray) -> LabelStack:
    """One-hot stack where all-zero pixels are treated as ignored"""
    ignored = values.sum(axis=0) == 0
    return LabelStack(values=values, ignore_mask=ignored if ignored.any() else None)


def read_labels(path: PathLike) -> LabelStack:
    """Read a one-hot FLD stack; all-zero pixels become ignored"""
    try:
        return labels_from_array(read_tensor(path))
    except ValueError as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"not a one-hot label stack: {e}", path=path) from e


# === PGM ===

def _pgm_maxval(image: Image.Image) -> int:
    """maxval of an opened PGM; Pillow only picks the raw decoder for 255"""
    decoder, _, _, args = image.tile[0]
    return PGM_MAXVAL if decoder == "raw" else int(args[-1])


def decode_pgm(data: bytes, path: Optional[PathLike] = None) -> Field2D:
    """
    Parse a P2/P5 PGM mask into a {0,1} field

    Raises:
        FormatError: Unknown magic, maxval other than 255, short pixel data
    """
    magic = data[:2]
    if magic not in PGM_MAGIC:
        raise FormatError(f"unknown PGM magic {magic!r}", offset=0, path=path)
    try:
        image = Image.open(BytesIO(data), formats=["PPM"])
    except (OSError, ValueError, SyntaxError) as e:
        raise FormatError(f"bad PGM header: {e}", offset=0, path=path) from e
    if image.mode != "L":
        raise FormatError(f"PGM must be 8-bit grayscale, got mode {image.mode}", offset=0, path=path)
    maxval = _pgm_maxval(image)
    if maxval != PGM_MAXVAL:
        raise FormatError(f"PGM maxval must be {PGM_MAXVAL}, got {maxval}", offset=0, path=path)

    try:
        image.load()
    except (OSError, ValueError) as e:
        raise FormatError(f"PGM pixel data unreadable: {e}", offset=len(data), path=path) from e
    pixels = np.asarray(image)
    return Field2D(values=(pixels > PGM_FOREGROUND).astype(np.float64))


def read_pgm(path: PathLike) -> Field2D:
    """Read a PGM mask file"""
    path = Path(path)
    return decode_pgm(path.read_bytes(), path=path)


def encode_pgm(field: Field2D) -> bytes:
    """Binary P5 with values clipped to [0,1] and scaled to 0–255"""
    pixels = np.rint(np.clip(field.values, 0.0, 1.0) * PGM_MAXVAL).astype(np.uint8)
    buffer = BytesIO()
    Image.fromarray(pixels).save(buffer, format="PPM")
    return buffer.getvalue()


def write_pgm(path: PathLike, field: Field2D):
    """Write a field as a P5 PGM image"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pgm(field))
    logger.debug("wrote %s", path)
