"""Deterministic chunked parallelism.

Work is partitioned into fixed chunks up front and results are merged in
chunk order, so output is identical for any worker count.  The worker
count is capped by the COVINDEX_THREADS environment variable.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    env = os.environ.get("COVINDEX_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def chunked_map(fn, chunks, threads: int | None = None) -> list:
    """Apply fn to each chunk, in order; thread the work when allowed."""
    chunks = list(chunks)
    n = thread_count() if threads is None else max(1, threads)
    if n == 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, chunks))


def split_indices(total: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(i, min(i + chunk_size, total)) for i in range(0, total, chunk_size)]
