"""
Combined multi-class training loss

    total = λ1 · Σ_i eie_energy(α·σ(P)_i − Ĝ_i) + λ2 · CE(P, G)

The EIE term runs over every class map, background included, in fixed class
order. Ignored pixels keep Ĝ = 0 inside D and receive no gradient.
"""
import logging
import math
from typing import Tuple

import numpy as np

from ..common.errors import DimensionError
from ..common.models import CombinedField, EieConfig, LabelStack, LogitStack, LossBreakdown
from .energy import eie_energy, eie_gradient
from .softmax import check_pair, cross_entropy, cross_entropy_gradient, softmax

logger = logging.getLogger(__name__)


def _check(logits: LogitStack, labels: LabelStack):
    check_pair(logits, labels)
    if logits.classes < 2:
        raise DimensionError(f"combined loss needs at least 2 classes, got {logits.classes}")


def softmax_backward(probs: np.ndarray, grad_probs: np.ndarray) -> np.ndarray:
    """
    Chain ∂L/∂σ through the softmax Jacobian

    ∂L/∂P_c = Σ_i g_i·σ_i·(δ_ic − σ_c) = σ_c·(g_c − Σ_i g_i·σ_i)
    """
    weighted = np.sum(grad_probs * probs, axis=0, keepdims=True)
    return probs * (grad_probs - weighted)


def combined_loss_and_grad(
    logits: LogitStack,
    labels: LabelStack,
    cfg: EieConfig,
    with_grad: bool = True
) -> Tuple[LossBreakdown, LogitStack]:
    """
    Loss breakdown and ∂total/∂P in one pass

    Args:
        logits: Raw scores P (N ≥ 2 classes)
        labels: One-hot ground truth on the same grid
        cfg: α, λ1, λ2
        with_grad: Skip the gradient (returned as zeros) when False

    Returns:
        (LossBreakdown, gradient as LogitStack)

    Raises:
        DimensionError: Class-count or grid mismatch
    """
    _check(logits, labels)
    probs = softmax(logits).values
    gt = labels.values

    eie_per_class = []
    grad_probs = np.zeros_like(probs)
    for i in range(logits.classes):
        field = CombinedField(values=cfg.alpha * probs[i] - gt[i], alpha=cfg.alpha)
        eie_per_class.append(eie_energy(field))
        if with_grad and cfg.lambda1 > 0:
            grad_probs[i] = cfg.lambda1 * cfg.alpha * eie_gradient(field).values

    ce = cross_entropy(logits, labels)
    eie_total = math.fsum(eie_per_class)
    breakdown = LossBreakdown(
        eie_per_class=eie_per_class,
        eie_total=eie_total,
        ce=ce,
        total=cfg.lambda1 * eie_total + cfg.lambda2 * ce
    )

    grad = np.zeros_like(probs)
    if with_grad:
        grad = softmax_backward(probs, grad_probs)
        grad[:, labels.ignored] = 0.0
        if cfg.lambda2 > 0:
            grad += cfg.lambda2 * cross_entropy_gradient(probs, labels)
    return breakdown, LogitStack(values=grad)


def combined_loss(logits: LogitStack, labels: LabelStack, cfg: EieConfig) -> LossBreakdown:
    """λ1·Σ_i L_eie + λ2·L_ce with its components"""
    breakdown, _ = combined_loss_and_grad(logits, labels, cfg, with_grad=False)
    return breakdown


def combined_loss_backward(logits: LogitStack, labels: LabelStack, cfg: EieConfig) -> LogitStack:
    """∂ combined_loss(...).total / ∂P, zero at ignored pixels"""
    _, grad = combined_loss_and_grad(logits, labels, cfg)
    return grad
