"""
Per-pixel linear classifier with hand-written forward and backward passes
"""
import numpy as np
from scipy import ndimage

from ..common.errors import DimensionError
from ..common.models import Field2D, LogitStack, ModelGradients, PixelClassifier
from ..common.rng import stream

FEATURE_NAMES = ("intensity", "blur3", "blur7", "x", "y", "constant")
FEATURE_COUNT = len(FEATURE_NAMES)


def features(image: Field2D) -> np.ndarray:
    """
    F×h×w feature planes: intensity, 3×3 and 7×7 box blurs (cyclic
    boundaries), column and row coordinates scaled to [0, 1], constant 1
    """
    h, w = image.shape
    values = image.values
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    return np.stack([
        values,
        ndimage.uniform_filter(values, size=3, mode="wrap"),
        ndimage.uniform_filter(values, size=7, mode="wrap"),
        cols / max(w - 1, 1),
        rows / max(h - 1, 1),
        np.ones((h, w)),
    ])


def _check(model: PixelClassifier, feats: np.ndarray):
    if feats.ndim != 3 or feats.shape[0] != model.feature_count:
        raise DimensionError(
            f"model expects {model.feature_count} feature planes, got shape {feats.shape}"
        )


def forward(model: PixelClassifier, feats: np.ndarray) -> LogitStack:
    """logits_c(x) = Σ_f weights[c, f]·feat_f(x) + bias[c]"""
    _check(model, feats)
    logits = np.einsum("cf,fhw->chw", model.weights, feats) + model.bias[:, np.newaxis, np.newaxis]
    return LogitStack(values=logits)


def backward(model: PixelClassifier, feats: np.ndarray, grad_logits: LogitStack) -> ModelGradients:
    """
    Exact parameter gradients for an upstream ∂L/∂logits

    Raises:
        DimensionError: If the class count or grid does not line up
    """
    _check(model, feats)
    if grad_logits.classes != model.classes or grad_logits.shape != feats.shape[1:]:
        raise DimensionError(
            f"gradient of shape {grad_logits.values.shape} does not fit "
            f"{model.classes} classes on grid {feats.shape[1:]}"
        )
    g = grad_logits.values
    return ModelGradients(
        weights=np.einsum("chw,fhw->cf", g, feats),
        bias=g.sum(axis=(1, 2))
    )


def init_model(classes: int, seed: int, scale: float = 0.01) -> PixelClassifier:
    """Gaussian weights from the run's "init" stream, zero bias"""
    weights = stream(seed, "init").normal(0.0, scale, size=(classes, FEATURE_COUNT))
    return PixelClassifier(weights=weights, bias=np.zeros(classes))


def apply_update(model: PixelClassifier, grads: ModelGradients, learning_rate: float) -> PixelClassifier:
    """Plain gradient-descent step"""
    return PixelClassifier(
        weights=model.weights - learning_rate * grads.weights,
        bias=model.bias - learning_rate * grads.bias
    )
