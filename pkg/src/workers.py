from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

THREADS_ENV = "NNLS_SPECTRA_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Thread count: NNLS_SPECTRA_THREADS wins over the explicit value."""
    env = os.getenv(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, int(threads or 1))


def map_threads(fn: Callable[[T], object], items: Sequence[T], threads: int | None = None) -> list:
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def map_chunks(
    fn: Callable[[np.ndarray], np.ndarray],
    values: np.ndarray,
    threads: int | None = None,
    *,
    min_chunk: int = 64,
) -> np.ndarray:
    """Apply a vectorised fn to chunks of a 1d array in parallel, concatenating along axis 0."""
    values = np.asarray(values)
    n = resolve_threads(threads)
    if n == 1 or values.size <= min_chunk:
        return fn(values)
    n_chunks = min(n, max(1, values.size // min_chunk))
    chunks = np.array_split(values, n_chunks)
    with ThreadPoolExecutor(max_workers=n) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=0)
