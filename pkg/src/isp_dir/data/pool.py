"""Bounded worker pool for per-image synthesis.

Rendering toy samples and degrading images are independent per item, so
the `synth-data` and `degrade` commands fan them out over threads. Results
come back in input order and every task derives its randomness from its own
index, so output never depends on scheduling.
"""

import asyncio
from collections.abc import Callable, Sequence
from typing import Any, TypeVar

from ..config import Config, get_config
from ..logging_config import get_logger

logger = get_logger("data.pool")

T = TypeVar("T")
R = TypeVar("R")


class SynthesisPool:
    """Runs a function over items with at most ``max_workers`` in flight.

    Example:
        pool = SynthesisPool(max_workers=4)
        results = await pool.map(render, range(200))
        stats = pool.get_pool_stats()
    """

    def __init__(self, max_workers: int | None = None, config: Config | None = None) -> None:
        """Initialize the pool.

        Args:
            max_workers: Concurrency limit (default from ISP_DIR_WORKERS)
            config: Configuration instance (uses get_config() if not provided)
        """
        self.config = config or get_config()
        self._max_workers = max_workers or self.config.workers
        self._in_flight = 0
        self._stats = {
            "submitted": 0,
            "completed": 0,
            "failed": 0,
            "peak_in_flight": 0,
        }
        logger.debug(f"Initialized synthesis pool with max_workers={self._max_workers}")

    async def map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        """Apply fn to every item in worker threads.

        Raises:
            Exception: The first exception raised by any task
        """
        semaphore = asyncio.Semaphore(self._max_workers)

        async def run_one(item: T) -> R:
            async with semaphore:
                self._in_flight += 1
                self._stats["peak_in_flight"] = max(self._stats["peak_in_flight"], self._in_flight)
                try:
                    result = await asyncio.to_thread(fn, item)
                except Exception:
                    self._stats["failed"] += 1
                    raise
                finally:
                    self._in_flight -= 1
                self._stats["completed"] += 1
                return result

        self._stats["submitted"] += len(items)
        return list(await asyncio.gather(*(run_one(item) for item in items)))

    def get_pool_stats(self) -> dict[str, Any]:
        """Get pool usage statistics.

        Returns:
            Dictionary with max_workers and task counters
        """
        return {"max_workers": self._max_workers, **self._stats}


def run_parallel(fn: Callable[[T], R], items: Sequence[T], max_workers: int | None = None) -> list[R]:
    """Synchronous wrapper: run a SynthesisPool map on a fresh event loop."""
    pool = SynthesisPool(max_workers=max_workers)
    results = asyncio.run(pool.map(fn, items))
    logger.debug(f"Synthesis pool finished: {pool.get_pool_stats()}")
    return results
