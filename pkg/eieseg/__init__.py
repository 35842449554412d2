"""
eieseg v1.0

Elastic interaction energy loss for thin-structure segmentation: spectral
energy and exact gradients, a curve-evolution simulator, a toy trainer and
evaluation metrics
"""
__version__ = "1.0.0"

from .common.config import get_config
from .losses import combined_loss, combined_loss_backward, eie_energy, eie_gradient
from .metrics import registry as metric_registry

__all__ = [
    "combined_loss",
    "combined_loss_backward",
    "eie_energy",
    "eie_gradient",
    "get_config",
    "metric_registry",
]
