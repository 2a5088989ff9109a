"""Schedule-independent thread-pool helpers.

Tasks write into preallocated slots keyed by their index and draw from
per-index random sub-streams, so results are bit-identical for any worker
count.  TS_ESTIMATE_THREADS caps the pool (0 or unset = auto).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

THREADS_ENV = "TS_ESTIMATE_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Resolve the worker count: explicit argument beats the environment
    variable; 0 means one worker per CPU."""
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "0")
        try:
            requested = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if requested < 0:
        raise ValueError("worker count must be non-negative")
    if requested == 0:
        requested = os.cpu_count() or 1
    return requested


def indexed_map(task: Callable[[int], None], count: int, workers: int | None = None):
    """Run task(i) for i in range(count) on a thread pool.

    Each task must be self-contained in its index (own sub-stream, own
    output slot); then the result is independent of the schedule.
    """
    n = worker_count(workers)
    if n <= 1 or count <= 1:
        for i in range(count):
            task(i)
        return
    with ThreadPoolExecutor(max_workers=min(n, count)) as pool:
        # list() propagates the first exception from any task
        list(pool.map(task, range(count)))
