"""Order-preserving parallel map over a thread pool."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply ``fn`` to every item and return results in input order.

    With ``workers > 1`` the calls run on a ThreadPoolExecutor; NumPy and
    LAPACK release the GIL for the heavy parts. Results never depend on
    scheduling because ``Executor.map`` yields them in submission order.

    Args:
        fn: Function of one argument.
        items: Inputs.
        workers: Thread count; 1 or less runs sequentially.

    Returns:
        List of ``fn(item)`` in the order of ``items``.
    """
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
