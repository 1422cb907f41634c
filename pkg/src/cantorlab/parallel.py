"""Deterministic ordered parallel map over processes.

Results equal [fn(x) for x in items] regardless of worker count: inputs carry
their own seeds, workers share no state, and outputs are collected in input
order.  Worker functions must be module-level (picklable) and arguments
must be picklable.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    return os.cpu_count() or 1


def ordered_map(fn, items, workers: int = 1, chunksize: int | None = None) -> list:
    items = list(items)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    if chunksize is None:
        chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunksize))
