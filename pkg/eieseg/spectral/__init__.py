"""Forward-normalised 2D DFT and the frequency-radius kernel"""
from .transform import (
    dft_forward,
    dft_inverse,
    gradient_lipschitz,
    parseval_energy,
    radius_weights,
)

__all__ = [
    "dft_forward",
    "dft_inverse",
    "gradient_lipschitz",
    "parseval_energy",
    "radius_weights",
]
