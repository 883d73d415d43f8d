"""Tests for the thread-pool sweep runner."""

import concurrent.futures

import pytest

from slice_alloc.core import async_sweep
from slice_alloc.core import metrics


class TestAsyncSweepRunner:
    """Test AsyncSweepRunner functionality."""

    def test_initialization(self):
        """Test runner initialization."""
        runner = async_sweep.AsyncSweepRunner(max_workers=3)
        assert isinstance(runner._executor, concurrent.futures.ThreadPoolExecutor)
        assert runner._max_workers == 3
        runner.shutdown()

    def test_worker_floor(self):
        """Test that a non-positive worker count still gets one worker."""
        runner = async_sweep.AsyncSweepRunner(max_workers=0)
        assert runner._max_workers == 1
        runner.shutdown()

    async def test_run_in_executor(self):
        """Test running a simple function in the pool."""
        runner = async_sweep.AsyncSweepRunner(max_workers=2)
        try:
            assert await runner.run_in_executor(lambda x, y: x * y, 6, 7) == 42
        finally:
            runner.shutdown()

    async def test_run_in_executor_exception(self):
        """Test that exceptions propagate from the pool."""
        runner = async_sweep.AsyncSweepRunner(max_workers=2)

        def failing() -> None:
            raise ValueError("Test error")

        try:
            with pytest.raises(ValueError, match="Test error"):
                await runner.run_in_executor(failing)
        finally:
            runner.shutdown()

    async def test_outcomes_in_submission_order(self, tiny_document):
        """Test that outcomes line up with their jobs."""
        jobs = metrics.sweep_jobs(tiny_document)
        runner = async_sweep.AsyncSweepRunner(max_workers=3)
        try:
            outcomes = await runner.run_jobs(tiny_document, jobs)
        finally:
            runner.shutdown()
        assert [(o.num_small_cells, o.seed) for o in outcomes] == [
            (j.num_small_cells, j.seed) for j in jobs
        ]
        assert all(o.success for o in outcomes)

    async def test_matches_serial_sweep(self, tiny_document):
        """Test that the pool reproduces the sequential result exactly."""
        runner = async_sweep.AsyncSweepRunner(max_workers=4)
        try:
            parallel = await runner.run_sweep(tiny_document)
        finally:
            runner.shutdown()
        assert parallel == metrics.run_sweep(tiny_document)

    async def test_progress_callback(self, tiny_document):
        """Test one progress update per job."""
        updates = []
        runner = async_sweep.AsyncSweepRunner(max_workers=2)
        try:
            await runner.run_sweep(
                tiny_document,
                lambda p: updates.append((p.completed, p.total, p.failed)),
            )
        finally:
            runner.shutdown()
        assert [u[0] for u in updates] == [1, 2, 3, 4]
        assert all(u[1] == 4 for u in updates)
        assert updates[-1][2] == 0
