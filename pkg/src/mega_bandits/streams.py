"""Random streams.

Every random quantity in a run comes from a PCG64 generator whose state is
derived by numpy's ``SeedSequence`` from the run seed plus an integer spawn
key: ``(0,)`` for the environment and ``(1 + i,)`` for the i-th user.  Both
algorithms are specified bit-for-bit by numpy, so a given seed reproduces the
same run on every platform.

Consumption is fixed per round so that traces do not depend on how rounds are
batched: the environment draws ``K`` uniforms every round, and each active
user draws ``ROUND_DRAWS`` uniforms every round it is active.
"""

import numpy as np

ROUND_DRAWS = 4
ENV_KEY = 0

_SEED_LIMIT = 2**64


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) < _SEED_LIMIT:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return int(seed)


def generator(seed, *key):
    """PCG64 generator for ``seed`` and spawn key ``key``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def env_generator(seed):
    return generator(seed, ENV_KEY)


def user_generator(seed, index):
    return generator(seed, 1 + index)


def repetition_seed(master_seed, rep):
    """64-bit seed of repetition ``rep``; independent of execution order."""
    ss = np.random.SeedSequence(check_seed(master_seed), spawn_key=(int(rep),))
    return int(ss.generate_state(1, np.uint64)[0])
