from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator]


def make_generator(seed: SeedLike, stream: int = 0) -> np.random.Generator:
    """Returns the generator for one trial of a seeded run.

    Trial t of a run seeded with s draws from the Philox stream keyed
    s + t, so any trial can be replayed on its own. A Generator passed
    in is returned unchanged.

    Args:
        seed (SeedLike): Run seed or an existing generator.
        stream (int): Trial index added to the seed.

    Returns:
        np.random.Generator: The generator for that trial.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed < 0:
        raise ValueError(f"Seeds must be unsigned, got {seed}.")
    return np.random.Generator(np.random.Philox(key=int(seed) + int(stream)))
