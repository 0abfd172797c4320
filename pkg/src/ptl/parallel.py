"""Order-preserving thread map.

Hot kernels release the GIL, so threads give real concurrency.  Results are
always returned in task order, which keeps every reduction independent of the
worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("PTL_THREADS", "").strip()
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
