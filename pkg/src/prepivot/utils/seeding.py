"""Counter-based random substreams.

Every random quantity in the package is drawn from a generator keyed by
``(master seed, purpose, index)``. The same key always yields the same
stream, whichever worker evaluates it, so parallel and sequential runs agree
draw for draw.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    ASSIGNMENTS = 1
    GAUSSIAN = 2
    POPULATION = 3
    OBSERVED = 4


def substream(seed: int, purpose: Purpose, index: int = 0) -> np.random.Generator:
    """Return an independent Philox generator for ``(seed, purpose, index)``."""
    if index < 0:
        raise ValueError(f"Substream index must be nonnegative, got {index}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), int(index)))
    return np.random.Generator(np.random.Philox(sequence))


def child_seed(seed: int, purpose: Purpose, index: int) -> int:
    """Derive a 64-bit master seed for a nested computation (e.g. one simulation)."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), int(index)))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
