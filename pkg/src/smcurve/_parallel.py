"""Thread-budget resolution and an order-preserving parallel map."""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "SMCURVE_THREADS"


def resolve_threads(threads=None):
    """Explicit budget, else ``$SMCURVE_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread budget must be >= 1, got {threads}")
    return threads


def parallel_map(fn, items, threads=None):
    """``[fn(x) for x in items]``, evaluated on up to ``threads`` threads.

    Results come back in input order, so callers that derive their random
    streams from the item (never from the worker) get identical output for
    every thread budget.
    """
    items = list(items)
    threads = min(resolve_threads(threads), max(len(items), 1))
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
