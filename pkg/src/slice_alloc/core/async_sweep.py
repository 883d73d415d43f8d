"""Run sweep jobs on a thread pool from asyncio."""

import asyncio
from concurrent import futures
import typing

from loguru import logger

from slice_alloc.core import config as config_module
from slice_alloc.core import metrics
from slice_alloc.core.models import progress as progress_models
from slice_alloc.core.models import results


ProgressCallback = typing.Callable[[progress_models.SweepProgress], None]


class AsyncSweepRunner:
    """Evaluates independent sweep jobs on a bounded thread pool.

    Results come back in submission order, so the worker count never
    changes the aggregated output.
    """

    def __init__(self, max_workers: int = 4):
        self._max_workers = max(1, max_workers)
        self._executor = futures.ThreadPoolExecutor(max_workers=self._max_workers)
        self._semaphore = asyncio.Semaphore(self._max_workers)
        logger.debug(f"Initialized sweep runner with {self._max_workers} workers")

    async def run_in_executor(
        self, func: typing.Callable[..., typing.Any], *args: typing.Any
    ) -> typing.Any:
        """Run a synchronous function in the thread pool."""
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, func, *args)

    async def run_jobs(
        self,
        document: config_module.RunDocument,
        jobs: list[metrics.SweepJob],
        progress_callback: ProgressCallback | None = None,
    ) -> list[results.SeedOutcome]:
        """Evaluate ``jobs`` concurrently, reporting progress as they finish."""
        progress = progress_models.SweepProgress(
            total=len(jobs), status="Running sweep"
        )

        async def run_one(job: metrics.SweepJob) -> results.SeedOutcome:
            async with self._semaphore:
                outcome: results.SeedOutcome = await self.run_in_executor(
                    metrics.evaluate_job, document, job
                )
            progress.completed += 1
            progress.current_point = job.num_small_cells
            if not outcome.success:
                progress.failed += 1
            progress.status = (
                f"{job.num_small_cells} cells, {job.users_per_small_cell} users/cell, "
                f"seed {job.seed}"
            )
            if progress_callback:
                progress_callback(progress)
            return outcome

        return list(await asyncio.gather(*(run_one(job) for job in jobs)))

    async def run_sweep(
        self,
        document: config_module.RunDocument,
        progress_callback: ProgressCallback | None = None,
    ) -> list[results.SliceReport]:
        """Evaluate and aggregate the full sweep of ``document``."""
        jobs = metrics.sweep_jobs(document)
        logger.info(f"Running sweep of {len(jobs)} jobs on {self._max_workers} workers")
        outcomes = await self.run_jobs(document, jobs, progress_callback)
        return metrics.aggregate(outcomes)

    def shutdown(self) -> None:
        """Shutdown the thread pool executor."""
        self._executor.shutdown(wait=True)
