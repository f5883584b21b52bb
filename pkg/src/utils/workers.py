"""
Worker Pool
Order-preserving parallel map used by the numerical modules.

Results always come back in input order, and every reduction is performed by
the caller on the ordered concatenation, so outputs do not depend on the
number of workers.
"""

import concurrent.futures
import os
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

WORKERS_ENV = "APERIODICA_WORKERS"


def default_workers() -> int:
    """Worker count from APERIODICA_WORKERS (default 1)."""
    raw = os.getenv(WORKERS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """
    Applies ``fn`` to every item, possibly on a thread pool.

    Args:
        fn: Pure function of one item.
        items: Work items.
        workers: Thread count; None reads APERIODICA_WORKERS.

    Returns:
        list: ``[fn(item) for item in items]`` in input order.
    """
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]

    results: list = [None] * len(items)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(fn, item): idx for idx, item in enumerate(items)}
        for future in concurrent.futures.as_completed(futures):
            results[futures[future]] = future.result()
    return results
