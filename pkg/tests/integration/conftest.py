"""Integration fixtures: one full density sweep shared by the trend tests."""

import asyncio

import pytest

from slice_alloc.core import async_sweep
from slice_alloc.core import config


@pytest.fixture(scope="session")
def density_document():
    """Default scenario swept over 0 and 10..50 small cells, 20 seeds, 2 and 4 users."""
    return config.RunDocument(
        sweep=config.SweepConfig(
            num_small_cells=[10, 20, 30, 40, 50],
            users_per_small_cell=[2, 4],
            seeds=list(range(1, 21)),
            include_baseline=True,
        )
    )


@pytest.fixture(scope="session")
def density_reports(density_document):
    """Aggregated reports of the full sweep."""
    runner = async_sweep.AsyncSweepRunner(
        config.resolve_thread_count(config.get_runtime_settings())
    )
    try:
        return asyncio.run(runner.run_sweep(density_document))
    finally:
        runner.shutdown()
