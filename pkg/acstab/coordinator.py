"""acstab sweep coordinator."""

from __future__ import annotations

import asyncio
from collections.abc import Callable, Sequence
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import Generic, TypeVar

from .const import LOGGER
from .exceptions import AcstabError

TaskT = TypeVar("TaskT")
ResultT = TypeVar("ResultT")


class SweepCoordinator(Generic[TaskT, ResultT]):
    """Class to map a point function over a grid and merge results by index."""

    failures: int = 0

    def __init__(
        self,
        fn: Callable[[TaskT], ResultT],
        name: str,
        workers: int = 1,
    ) -> None:
        """Initialize the sweep coordinator."""
        self.fn = fn
        self.name = name
        self.workers = max(1, workers)

    def run(self, tasks: Sequence[TaskT]) -> list[ResultT]:
        """Evaluate every task; results are returned in task order."""
        LOGGER.debug("%s: %d points on %d workers", self.name, len(tasks), self.workers)
        if self.workers == 1 or len(tasks) < 2:
            return [self._evaluate(index, task) for index, task in enumerate(tasks)]
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            return asyncio.run(self._async_run(executor, tasks))

    def _evaluate(self, index: int, task: TaskT) -> ResultT:
        """Evaluate one task in process."""
        try:
            return self.fn(task)
        except AcstabError as err:
            self.failures += 1
            LOGGER.error("%s: point %d failed: %s", self.name, index, err)
            raise

    async def _async_run(self, executor: Executor, tasks: Sequence[TaskT]) -> list[ResultT]:
        """Fan the tasks out to the executor and gather them in order."""
        loop = asyncio.get_running_loop()
        results = await asyncio.gather(
            *(loop.run_in_executor(executor, self.fn, task) for task in tasks),
            return_exceptions=True,
        )
        errors = [
            (index, result) for index, result in enumerate(results) if isinstance(result, Exception)
        ]
        if errors:
            self.failures += len(errors)
            index, first = errors[0]
            LOGGER.error(
                "%s: %d of %d points failed, first at %d: %s",
                self.name,
                len(errors),
                len(tasks),
                index,
                first,
            )
            raise first
        return results
