"""Seeding and parallel-map helpers used throughout the pipeline."""

import hashlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_MASK64 = (1 << 64) - 1


def _to_entropy(key):
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")
    return int(key) & _MASK64


def rng_for(seed, *keys):
    """Deterministic generator for (seed, *keys); strings hash platform-stably."""
    entropy = [_to_entropy(seed)] + [_to_entropy(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def parallel_map(fn, items, threads=1):
    """Map `fn` over `items`, preserving input order.

    With threads > 1 the calls fan out on a thread pool; results are still
    reduced in input order, so the thread count never changes the output.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def format_float(x):
    """Shortest decimal string that round-trips the float64 exactly."""
    return repr(float(x))
