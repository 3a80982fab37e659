"""Deterministic random number plumbing.

Every stochastic routine takes an explicit integer seed and builds its
generator from a counter-based bit stream (Philox), so results do not
depend on call order or on how work is split across workers.  Nested
experiments derive one sub-seed per cell with derive_seed, which hashes
the master seed together with the cell's coordinates.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit sub-seed for a named cell of an experiment.

    parts may mix ints and strings; the same (master_seed, parts) always
    yields the same sub-seed, on any platform.
    """
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little") & _MASK64


def generator(seed: int) -> np.random.Generator:
    """Philox generator keyed directly by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))
