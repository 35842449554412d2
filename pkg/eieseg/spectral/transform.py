"""
Spectral transforms

Convention: the forward transform carries the 1/(h·w) factor,

    d[m][n] = 1/(h·w) · Σ_{y,x} f[y][x] · exp(−2πi(m·y/h + n·x/w))

and the inverse carries none. numpy's pocketfft backend handles arbitrary
(including prime) sizes exactly. Boundaries are periodic; nothing is padded.
"""
from functools import lru_cache

import numpy as np

from ..common.models import Field2D, RadiusWeights, SpectralField

NORM = "forward"


def dft_forward(field: Field2D) -> SpectralField:
    """Forward-normalised 2D DFT of a real field"""
    return SpectralField(coefficients=np.fft.fft2(field.values, norm=NORM))


def dft_inverse(spectrum: SpectralField) -> Field2D:
    """
    Exact inverse of dft_forward

    The imaginary residue (round-off for conjugate-symmetric spectra) is discarded.
    """
    return Field2D(values=np.fft.ifft2(spectrum.coefficients, norm=NORM).real)


def signed_frequencies(n: int) -> np.ndarray:
    """Integer cycles per image: k = m for m ≤ n/2, else m − n"""
    m = np.arange(n)
    return np.where(2 * m <= n, m, m - n).astype(np.float64)


@lru_cache(maxsize=64)
def _radius_table(h: int, w: int) -> np.ndarray:
    km = signed_frequencies(h)[:, np.newaxis]
    kn = signed_frequencies(w)[np.newaxis, :]
    table = np.sqrt(km * km + kn * kn)
    table.setflags(write=False)
    return table


def radius_weights(h: int, w: int) -> RadiusWeights:
    """
    sqrt(k_m² + k_n²) for every bin of an h×w spectrum

    The table is cached per (h, w) and shared read-only.
    """
    if h < 1 or w < 1:
        raise ValueError(f"grid must be at least 1x1, got {h}x{w}")
    return RadiusWeights(weights=_radius_table(h, w))


def radius_array(h: int, w: int) -> np.ndarray:
    """Cached read-only weight table, without the model wrapper"""
    return _radius_table(h, w)


def parseval_energy(field: Field2D) -> float:
    """Σ f² / (h·w), which equals Σ |d_mn|² under the forward normalisation"""
    return float(np.sum(field.values * field.values) / (field.height * field.width))


def gradient_lipschitz(h: int, w: int, alpha: float = 1.0) -> float:
    """
    Largest Hessian eigenvalue of σ ↦ eie_energy(α·σ − g)

    The energy is (1/(hw)²)·Σ w_mn |F D|², so the Hessian in D has eigenvalues
    2·w_mn/(hw).
    """
    return 2.0 * alpha * alpha * float(_radius_table(h, w).max()) / (h * w)
