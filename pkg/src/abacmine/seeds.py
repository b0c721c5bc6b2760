"""Deterministic, named random substreams derived from one master seed.

Each pipeline stage draws from its own substream so a change in one stage
never perturbs the randomness of another.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *names: object) -> int:
    """Stable 63-bit seed for a named substream of the master seed."""
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for name in names:
        h.update(b"/")
        h.update(str(name).encode())
    return int.from_bytes(h.digest()[:8], "big") >> 1


def substream(master: int, *names: object) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, *names)))
