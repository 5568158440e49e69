from typing import Union

import numpy as np


def get_random_generator(
    seed: Union[int, np.random.SeedSequence, np.random.Generator, None]
) -> np.random.Generator:
    """Get a random generator from a seed.

    Used to draw random test problems and benchmark instances, so that a
    scenario or benchmark run is reproducible from its integer seed.

    Parameters
    ----------
    * `seed` [int, SeedSequence instance, Generator instance, or None]:
        Anything other than None gives reproducible draws. A Generator is
        passed through untouched so callers can share one stream.

    Returns
    -------
    * `rng`: [Generator instance]
       Random generator.
    """
    if seed is None:
        return np.random.default_rng()
    elif isinstance(seed, (bool, float)):
        raise TypeError("Seed must be an integer, got {}.".format(type(seed)))
    elif isinstance(seed, (int, np.integer, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    elif isinstance(seed, np.random.Generator):
        return seed
    else:
        raise TypeError(
            "Seed must be either None, an integer, a SeedSequence or a "
            "Generator instance."
        )
