"""Deterministic parallel map and reduction helpers."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def pairwise_sum(values: np.ndarray) -> float:
    """Fixed-order cascade sum of a 1-d array.

    The tree shape depends only on the length, so the result is the same no
    matter how the values were produced.
    """
    v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        return 0.0
    while v.size > 1:
        if v.size % 2:
            v = np.concatenate([v, [0.0]])
        v = v[0::2] + v[1::2]
    return float(v[0])


def ordered_map(fn: Callable[[T], R], items: Sequence[T], n_jobs: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally on a thread pool; output order is fixed."""
    if n_jobs is None or n_jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def chunks(n: int, size: int) -> list[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def concat(parts: Iterable[np.ndarray]) -> np.ndarray:
    parts = list(parts)
    return np.concatenate(parts) if parts else np.zeros(0)
