"""
Seeded random streams

Every consumer of randomness asks for a named stream derived from the run
seed. Streams are PCG64 generators seeded through numpy's SeedSequence with a
spawn key built from the stream names, so streams are independent and adding
a new consumer never shifts the numbers another consumer sees.
"""
import zlib
from typing import Tuple, Union

import numpy as np

StreamName = Union[str, int]


def _key(name: StreamName) -> int:
    if isinstance(name, int):
        if name < 0:
            raise ValueError(f"stream index must be non-negative, got {name}")
        return name
    # crc32 is stable across processes, unlike hash()
    return zlib.crc32(name.encode("utf-8"))


def spawn_key(*names: StreamName) -> Tuple[int, ...]:
    """Spawn key for a stream path such as ("train", 3)"""
    return tuple(_key(n) for n in names)


def stream(seed: int, *names: StreamName) -> np.random.Generator:
    """
    Generator for the named stream of a run

    Args:
        seed: Run seed (non-negative)
        *names: Stream path, e.g. ("scene", "val", 2)

    Returns:
        Independent PCG64-backed generator
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    sequence = np.random.SeedSequence(seed, spawn_key=spawn_key(*names))
    return np.random.Generator(np.random.PCG64(sequence))
