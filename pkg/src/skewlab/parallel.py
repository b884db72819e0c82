"""Deterministic fan-out over worker threads.

Work is split into a fixed number of shards chosen by the caller (never
by the thread count); shard i always receives the i-th child of the
root SeedSequence and results are returned in shard order.  The numba
kernels release the GIL, so threads give real parallelism.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def resolve_threads(threads: int | None) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def spawn_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(int(n))


def split_counts(total: int, n_shards: int) -> list[int]:
    base, extra = divmod(int(total), int(n_shards))
    return [base + (1 if i < extra else 0) for i in range(n_shards)]


def ordered_map(fn, items, threads: int | None = 1) -> list:
    """[fn(item) for item in items], evaluated on up to `threads` workers."""
    items = list(items)
    threads = min(resolve_threads(threads), max(len(items), 1))
    if threads == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
