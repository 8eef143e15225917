"""Bounded-parallel execution preserving input order."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def run_parallel(fn, items, max_parallel: int):
    """Apply fn to each item with at most max_parallel in flight.

    Results come back in input order regardless of completion order; the
    first exception propagates after outstanding work drains.
    """
    items = list(items)
    if not items:
        return []
    if max_parallel <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_parallel) as pool:
        return list(pool.map(fn, items))
