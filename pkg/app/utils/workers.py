"""
Worker pool for independent work items (sequences, trainings).

Results always come back in submission order so outputs do not depend on
scheduling.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from app.config.config import config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item, possibly concurrently, preserving order.

    Args:
        fn: Function applied to each item
        items: Work items
        threads: Pool size; defaults to the LOADID_THREADS setting

    Returns:
        List of results in the order of ``items``
    """
    items = list(items)
    if threads is None:
        threads = config.get_runtime_config()["threads"]
    threads = max(1, min(int(threads), len(items) or 1))

    if threads == 1:
        return [fn(item) for item in items]

    logger.debug(f"Dispatching {len(items)} work items on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
