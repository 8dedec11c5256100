"""Worker-pool plumbing for embarrassingly parallel eigensolve fan-out."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_WORKERS = "KREINAMO_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(ENV_WORKERS, "1")))
    except ValueError:
        return 1


def pmap(fn: Callable[[T], R], items: Sequence[T], workers: int | None = None) -> list[R]:
    """Order-preserving map, threaded when workers > 1.

    LAPACK releases the GIL, so threads give real concurrency for
    independent eigensolves without pickling large matrices.
    """
    workers = default_workers() if workers is None else max(1, workers)
    items = list(items)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
