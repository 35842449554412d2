"""Elastic interaction energy, cross-entropy and the combined training loss"""
from .combined import combined_loss, combined_loss_and_grad, combined_loss_backward
from .energy import combined_field, eie_energy, eie_gradient, energy_decompose
from .gradcheck import central_difference, gradcheck_report, relative_error
from .softmax import cross_entropy, softmax

__all__ = [
    "central_difference",
    "combined_field",
    "combined_loss",
    "combined_loss_and_grad",
    "combined_loss_backward",
    "cross_entropy",
    "eie_energy",
    "eie_gradient",
    "energy_decompose",
    "gradcheck_report",
    "relative_error",
    "softmax",
]
