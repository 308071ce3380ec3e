"""Seed hierarchy and deterministic chunked execution.

Child seeds come from hashing ``(master, label, index...)`` so that adding a
new component never shifts an existing stream. Work is split into chunks of a
fixed size that does not depend on the thread count, and results are
reassembled in chunk order, so ``threads`` only changes wall time.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 4096


def derive_seed(master: int, *labels) -> int:
    """Stable 64-bit child seed of ``master`` for the given label path."""
    key = repr((int(master),) + tuple(str(x) for x in labels)).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def rng_for(master: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, *labels)))


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def parallel_map(fn, items, threads: int = 1):
    """Order-preserving map; ``threads > 1`` uses a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
