"""Order-preserving worker pools built on joblib."""

from __future__ import annotations

from typing import Callable, List, Sequence, TypeVar

from joblib import Parallel, delayed


T = TypeVar("T")
R = TypeVar("R")


def _apply_chunk(fn: Callable[[T], R], chunk: Sequence[T]) -> List[R]:
    return [fn(item) for item in chunk]


def ordered_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    threads: int = 1,
    chunks_per_worker: int = 4,
) -> List[R]:
    """Apply ``fn`` to every item and return results in input order.

    With ``threads <= 1`` the work runs inline. Otherwise items are split into
    contiguous chunks dispatched to a joblib pool; ``fn`` must be picklable.
    """
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(item) for item in items]

    n_chunks = min(len(items), threads * chunks_per_worker)
    bounds = [round(i * len(items) / n_chunks) for i in range(n_chunks + 1)]
    chunks = [items[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    nested = Parallel(n_jobs=threads)(delayed(_apply_chunk)(fn, chunk) for chunk in chunks)
    return [result for chunk in nested for result in chunk]
