"""Seeded random substreams.

Every stochastic concern draws from its own generator derived from the run
seed, so adding small cells never perturbs the macro users or their fading.
"""

import enum

import numpy as np


class Stream(enum.IntEnum):
    """Independent random concerns of one drop."""

    SMALL_CELLS = 1
    MACRO_USERS = 2
    SMALL_CELL_USERS = 3
    FADING = 4


def generator(seed: int, stream: Stream, *key: int) -> np.random.Generator:
    """Return the generator for ``stream`` (optionally keyed, e.g. by user id)."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(int(stream), *key))
    return np.random.default_rng(sequence)
