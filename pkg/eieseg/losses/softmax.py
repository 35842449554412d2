"""
Softmax and cross-entropy over class stacks
"""
import numpy as np
from scipy import special

from ..common.errors import DimensionError
from ..common.models import LabelStack, LogitStack, ProbStack
from ..fields.core import require_same_shape


def softmax(logits: LogitStack) -> ProbStack:
    """Per-pixel softmax across classes (max-subtracted)"""
    return ProbStack(values=special.softmax(logits.values, axis=0))


def log_softmax(logits: LogitStack) -> np.ndarray:
    return logits.values - special.logsumexp(logits.values, axis=0, keepdims=True)


def check_pair(logits: LogitStack, labels: LabelStack):
    """
    Raises:
        DimensionError: If class counts or grids differ
    """
    if logits.classes != labels.classes:
        raise DimensionError(
            f"logits have {logits.classes} classes but labels have {labels.classes}"
        )
    require_same_shape(logits, labels, what="logits and labels")


def cross_entropy(logits: LogitStack, labels: LabelStack) -> float:
    """
    Mean of −log σ(P)_true over non-ignored pixels

    Returns 0 when every pixel is ignored.
    """
    check_pair(logits, labels)
    valid = labels.valid_count
    if valid == 0:
        return 0.0
    # label layers are zero at ignored pixels, so they drop out of the sum
    return float(-np.sum(labels.values * log_softmax(logits)) / valid)


def cross_entropy_gradient(probs: np.ndarray, labels: LabelStack) -> np.ndarray:
    """(σ − Ĝ)/M at non-ignored pixels, 0 elsewhere"""
    valid = labels.valid_count
    if valid == 0:
        return np.zeros_like(probs)
    grad = (probs - labels.values) / valid
    grad[:, labels.ignored] = 0.0
    return grad
