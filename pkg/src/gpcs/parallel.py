"""Deterministic fan-out helpers: per-task seeds and an order-preserving map."""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def spawn_seeds(seed, count):
    """`count` independent 64-bit seeds derived from one master seed."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def default_threads():
    return os.cpu_count() or 1


def parallel_map(func, items, threads=1):
    """map() over items with up to `threads` workers; output order matches input order."""
    items = list(items)
    if threads is None:
        threads = default_threads()
    if threads <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
