"""
Shared oracles for the test-suite

The oracles are written independently of the library: a direct DFT built
from explicit exponential matrices, a brute-force radius table and a
central-difference gradient.
"""
import numpy as np
import pytest

from eieseg.common.config import reload_config


def direct_dft(values: np.ndarray) -> np.ndarray:
    """d[m][n] = 1/(hw)·Σ f[y][x]·exp(−2πi(my/h + nx/w))"""
    h, w = values.shape
    rows = np.arange(h)
    cols = np.arange(w)
    ey = np.exp(-2j * np.pi * np.outer(rows, rows) / h)
    ex = np.exp(-2j * np.pi * np.outer(cols, cols) / w)
    return ey @ values @ ex / (h * w)


def brute_radius(h: int, w: int) -> np.ndarray:
    table = np.zeros((h, w))
    for m in range(h):
        km = m if 2 * m <= h else m - h
        for n in range(w):
            kn = n if 2 * n <= w else n - w
            table[m, n] = np.sqrt(km * km + kn * kn)
    return table


def direct_energy(values: np.ndarray) -> float:
    d = direct_dft(values)
    return float(np.sum(brute_radius(*values.shape) * np.abs(d) ** 2))


def finite_difference(func, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        keep = x[index]
        x[index] = keep + eps
        up = func(x)
        x[index] = keep - eps
        down = func(x)
        x[index] = keep
        grad[index] = (up - down) / (2 * eps)
    return grad


def max_relative(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-300)
    return float(np.abs(a - b).max() / scale)


@pytest.fixture
def oracle():
    """Namespace of the reference implementations"""
    class Oracle:
        dft = staticmethod(direct_dft)
        radius = staticmethod(brute_radius)
        energy = staticmethod(direct_energy)
        gradient = staticmethod(finite_difference)
        rel = staticmethod(max_relative)
    return Oracle


@pytest.fixture
def rng_for():
    """Seeded numpy Generator factory"""
    return lambda seed: np.random.default_rng(seed)


@pytest.fixture
def restore_config():
    """Reload settings after a test that patched the environment"""
    yield
    reload_config()
