"""
Finite-difference verification of the analytic gradients
"""
import logging
from typing import Callable, Optional, Tuple

import numpy as np

from ..common.models import (
    EieConfig,
    Field2D,
    GradcheckReport,
    GradcheckResult,
    LabelStack,
    LogitStack,
)
from ..common.rng import stream
from ..fields.core import one_hot
from .combined import combined_loss, combined_loss_backward
from .energy import eie_energy, eie_gradient

logger = logging.getLogger(__name__)

EIE_TOLERANCE = 1e-6
COMBINED_TOLERANCE = 1e-5


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """max|a − b| / max(max|a|, max|b|, 1e-300)"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()), 1e-300)
    return float(np.abs(a - b).max() / scale)


def central_difference(func: Callable[[np.ndarray], float], x: np.ndarray, eps: float) -> np.ndarray:
    """
    (f(x + eps·e_i) − f(x − eps·e_i)) / (2·eps) for every entry i of x

    Raises:
        ValueError: If eps is not positive
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        original = x[index]
        x[index] = original + eps
        upper = func(x)
        x[index] = original - eps
        lower = func(x)
        x[index] = original
        grad[index] = (upper - lower) / (2.0 * eps)
    return grad


def _worst(analytic: np.ndarray, numeric: np.ndarray) -> Tuple[Optional[int], Tuple[int, int]]:
    index = np.unravel_index(int(np.argmax(np.abs(analytic - numeric))), analytic.shape)
    if analytic.ndim == 3:
        return int(index[0]), (int(index[1]), int(index[2]))
    return None, (int(index[0]), int(index[1]))


def random_instance(h: int, w: int, classes: int, seed: int) -> Tuple[LogitStack, LabelStack]:
    """Random logits and labels with no ignored pixels"""
    logits = stream(seed, "gradcheck", "logits").normal(0.0, 2.0, size=(classes, h, w))
    class_map = stream(seed, "gradcheck", "labels").integers(0, classes, size=(h, w))
    return LogitStack(values=logits), one_hot(class_map, classes)


def check_eie_gradient(field: Field2D, eps: float = 1e-6, tolerance: float = EIE_TOLERANCE) -> GradcheckResult:
    """Compare eie_gradient with central differences of eie_energy"""
    analytic = eie_gradient(field).values
    numeric = central_difference(lambda x: eie_energy(Field2D(values=x)), field.values, eps)
    class_index, pixel = _worst(analytic, numeric)
    return GradcheckResult(
        check="eie_gradient",
        max_error=relative_error(analytic, numeric),
        tolerance=tolerance,
        class_index=class_index,
        pixel=pixel
    )


def check_combined_gradient(
    logits: LogitStack,
    labels: LabelStack,
    cfg: EieConfig,
    eps: float = 1e-6,
    tolerance: float = COMBINED_TOLERANCE
) -> GradcheckResult:
    """
    Compare combined_loss_backward with central differences of combined_loss

    Ignored pixels are hard-masked in the analytic gradient, so instances
    used here should carry no ignore mask.
    """
    analytic = combined_loss_backward(logits, labels, cfg).values
    numeric = central_difference(
        lambda x: combined_loss(LogitStack(values=x), labels, cfg).total,
        logits.values,
        eps
    )
    class_index, pixel = _worst(analytic, numeric)
    return GradcheckResult(
        check="combined_loss_backward",
        max_error=relative_error(analytic, numeric),
        tolerance=tolerance,
        class_index=class_index,
        pixel=pixel
    )


def gradcheck_report(
    h: int,
    w: int,
    classes: int,
    seed: int,
    eps: float = 1e-6,
    cfg: Optional[EieConfig] = None
) -> GradcheckReport:
    """
    Run both gradient checks on one seeded random instance

    Args:
        h, w: Grid size (≥ 2)
        classes: Class count (≥ 2)
        seed: Instance seed
        eps: Finite-difference step
        cfg: Loss weights (defaults to EieConfig())

    Returns:
        GradcheckReport with one result per check
    """
    if h < 2 or w < 2:
        raise ValueError(f"grid must be at least 2x2, got {h}x{w}")
    if classes < 2:
        raise ValueError(f"gradcheck needs at least 2 classes, got {classes}")
    cfg = cfg or EieConfig()

    field = Field2D(values=stream(seed, "gradcheck", "field").uniform(-1.0, 1.0, size=(h, w)))
    logits, labels = random_instance(h, w, classes, seed)
    results = [
        check_eie_gradient(field, eps),
        check_combined_gradient(logits, labels, cfg, eps)
    ]
    for result in results:
        logger.debug("%s: max relative error %.3e at class %s pixel %s",
                     result.check, result.max_error, result.class_index, result.pixel)
    return GradcheckReport(
        height=h, width=w, classes=classes, seed=seed, eps=eps, results=results
    )
