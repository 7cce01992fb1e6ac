import os

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar('T')
R = TypeVar('R')

THREADS_ENV = 'LSTSR_THREADS'


def worker_count() -> int:
    """
    Number of worker threads for fan-out work.

    Reads `LSTSR_THREADS`; defaults to the available parallelism.
    """
    value = os.getenv(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ValueError(f'{THREADS_ENV} must be an integer, got "{value}"')
    return max(1, os.cpu_count() or 1)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Apply `fn` to every item across worker threads; results keep input order."""
    items = list(items)
    workers = min(worker_count(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
