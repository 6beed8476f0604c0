"""Counter-based random substreams.

Every random draw in the package comes from a generator keyed by
``(master seed, purpose tag, index)``. A replication therefore sees the same
numbers whether it runs serially, in a thread pool, or alone.
"""

import os

import numpy as np

from .errors import InvalidInput

# purpose tags keep independent streams from colliding for one master seed
POINTS = 1
NULL_REPS = 2
POWER_REPS = 3
VERIFY = 4
MISC = 5

_MASK64 = (1 << 64) - 1


def check_seed(seed):
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise InvalidInput(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def substream(seed, tag, index=0):
    """Return a Philox generator for ``(seed, tag, index)``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(int(tag), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def thread_count(threads=None):
    """Resolve the worker count: explicit argument, then ``CGFNORM_THREADS``, then 1."""
    if threads is None:
        env = os.environ.get("CGFNORM_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise InvalidInput(f"CGFNORM_THREADS must be an integer, got {env!r}") from None
    return max(1, int(threads))
