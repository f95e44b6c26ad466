"""Chunked seeding so that parallel draws reproduce serial draws."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_SIZE = 1 << 14


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed >= 1 << 64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Generator for chunk ``chunk`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=(int(chunk),))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_bounds(count: int, chunk_size: int = CHUNK_SIZE):
    return [(start, min(start + chunk_size, count)) for start in range(0, count, chunk_size)]


def run_chunked(fn, count: int, seed: int, workers: int = 1, chunk_size: int = CHUNK_SIZE):
    """Evaluate ``fn(rng, n)`` per chunk and concatenate in chunk order.

    The output depends only on ``seed`` and ``chunk_size``; the worker
    count changes wall time, never values.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    bounds = chunk_bounds(count, chunk_size)
    if not bounds:
        return np.empty(0)
    jobs = [(chunk_rng(seed, i), hi - lo) for i, (lo, hi) in enumerate(bounds)]
    if workers <= 1 or len(jobs) == 1:
        parts = [fn(rng, n) for rng, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts)
