"""Seeded path blocks and their (optionally threaded) evaluation.

Each block of paths draws from its own Philox substream keyed by
``(seed, block_index)``. The block size is part of the seed schedule, so the
same ``(seed, n_paths, block_size)`` always produces the same paths no matter
how many workers evaluate the blocks.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_BLOCK_SIZE = 2000


def substream(seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(n_paths: int, block_size: int = DEFAULT_BLOCK_SIZE) -> list[int]:
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    if block_size < 1:
        raise ValueError("block_size must be positive")
    full, rest = divmod(int(n_paths), int(block_size))
    return [block_size] * full + ([rest] if rest else [])


def max_workers() -> int:
    env = os.environ.get("LFK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def map_blocks(
    fn: Callable[[int, int, np.random.Generator], T],
    n_paths: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int | None = None,
) -> list[T]:
    """Evaluate ``fn(index, size, rng)`` for every block; results in block order."""
    sizes = block_sizes(n_paths, block_size)
    jobs = [(i, n) for i, n in enumerate(sizes)]
    workers = max_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) == 1:
        return [fn(i, n, substream(seed, i)) for i, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(job[0], job[1], substream(seed, job[0])), jobs))
