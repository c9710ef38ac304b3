"""Worker-pool dispatch for independent replications and sweep points.

Every job is submitted to one process pool up front and the futures are
awaited with a single asyncio.gather. Results always come back in
submission order, so merged output does not depend on the worker count.
"""

from __future__ import annotations

import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

logger = logging.getLogger(__name__)

J = TypeVar("J")
R = TypeVar("R")


async def dispatch_all(fn: Callable[[J], R], jobs: Sequence[J], workers: int) -> list[R]:
    """Submit every job to a ``workers``-process pool and gather in order."""
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as executor:
        logger.debug("Dispatching %d jobs on %d workers", len(jobs), workers)
        futures = [loop.run_in_executor(executor, fn, job) for job in jobs]
        return list(await asyncio.gather(*futures))


def run_parallel(fn: Callable[[J], R], jobs: Sequence[J], workers: int = 1) -> list[R]:
    """Map ``fn`` over ``jobs``; in-process when ``workers`` <= 1.

    ``fn`` and every job must be picklable when ``workers`` > 1.
    """
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    return asyncio.run(dispatch_all(fn, jobs, workers))
