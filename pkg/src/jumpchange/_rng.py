"""Indexed random streams.

Every random quantity in the package is drawn from a Philox (counter-based)
generator keyed by ``(seed, *path)``; the path names the role and index of
the stream, so results never depend on evaluation order or thread count.
"""

import os

import numpy as np

# stream roles
JUMPS = 1
CONTINUOUS = 2
BOOTSTRAP = 3
EXACT = 4
MC_RUN = 5

THREADS_ENV = "JUMPCHANGE_THREADS"


def resolve_seed(seed):
    """Fix a concrete integer seed; ``None`` draws fresh OS entropy."""
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    if isinstance(seed, np.random.SeedSequence):
        return seed
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return seed


def seed_sequence(seed, *path) -> np.random.SeedSequence:
    if seed is None:
        raise ValueError("resolve the seed before deriving streams")
    key = tuple(int(p) for p in path)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def generator(seed, *path) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *path)))


def resolve_threads(threads=None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    return max(1, int(threads))


def parallel_map(func, items, threads=None):
    """``[func(x) for x in items]``, optionally on a thread pool; order kept."""
    threads = resolve_threads(threads)
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [func(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
