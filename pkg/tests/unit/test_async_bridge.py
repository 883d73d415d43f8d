"""Tests for the async CLI bridge."""

from unittest import mock

import pytest
import typer

from slice_alloc.cli import async_bridge


async def _noop():
    return 42


class TestRunAsync:
    """Test run_async."""

    def test_returns_result(self):
        """Test that the coroutine result is passed through."""
        assert async_bridge.run_async(_noop()) == 42

    def test_interrupt_exits_130(self):
        """Test that Ctrl-C maps to the conventional exit status."""
        coro = _noop()
        with mock.patch("asyncio.run", side_effect=KeyboardInterrupt):
            with pytest.raises(typer.Exit) as excinfo:
                async_bridge.run_async(coro)
        coro.close()
        assert excinfo.value.exit_code == 130

    def test_unexpected_error_reraised(self):
        """Test that other failures propagate after being reported."""
        coro = _noop()
        with mock.patch("asyncio.run", side_effect=RuntimeError("boom")):
            with pytest.raises(RuntimeError, match="boom"):
                async_bridge.run_async(coro)
        coro.close()
