"""Worker pool for independent Monte Carlo trials."""

import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence

logger = logging.getLogger(__name__)


class TrialPool:
    """
    Runs picklable trial functions inline (one worker) or in worker processes.

    Results always come back in task order, whatever order workers finish in.
    """

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.workers = workers
        self.executor: Optional[ProcessPoolExecutor] = None

    def start(self):
        """Start worker processes (no-op for a single worker)."""
        if self.workers > 1 and self.executor is None:
            self.executor = ProcessPoolExecutor(max_workers=self.workers)
            logger.debug("Started %d worker processes", self.workers)

    def shutdown(self):
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None

    async def __aenter__(self) -> "TrialPool":
        self.start()
        return self

    async def __aexit__(self, exc_type, exc, tb):
        self.shutdown()

    async def map(
        self,
        func: Callable,
        tasks: Sequence,
        on_done: Optional[Callable[[int], object]] = None,
    ) -> List:
        """Apply `func` to every task; `on_done(1)` is called as each one finishes."""
        if self.executor is None:
            results = []
            for task in tasks:
                results.append(func(task))
                if on_done:
                    on_done(1)
            return results

        loop = asyncio.get_running_loop()
        futures = [loop.run_in_executor(self.executor, func, task) for task in tasks]
        if on_done:
            for future in futures:
                future.add_done_callback(lambda _: on_done(1))
        return list(await asyncio.gather(*futures))
