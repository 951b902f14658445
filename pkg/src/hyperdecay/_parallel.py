"""Deterministic per-frequency parallel map, capped by HYPERDECAY_THREADS."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["thread_count", "pmap"]


def thread_count() -> int:
    raw = os.environ.get("HYPERDECAY_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def pmap(fn, items):
    """Map preserving input order; threaded only when HYPERDECAY_THREADS > 1."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
