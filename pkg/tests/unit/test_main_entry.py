"""Tests for __main__.py entry point."""

import pathlib
from unittest import mock

import pytest

from slice_alloc import __main__


class TestMainEntryPoint:
    """Test main entry point functionality."""

    def test_main_function_available(self):
        """Test that __main__ re-exports cli.main.main."""
        from slice_alloc.cli.main import main

        assert callable(__main__.main)
        assert __main__.main is main

    @mock.patch("slice_alloc.__main__.main")
    def test_main_function_call(self, mock_main):
        """Test that the entry point can be called."""
        from slice_alloc.__main__ import main

        main()
        mock_main.assert_called_once()

    @mock.patch("slice_alloc.__main__.main")
    def test_exception_propagation(self, mock_main):
        """Test that exceptions from main propagate."""
        mock_main.side_effect = RuntimeError("CLI error")
        from slice_alloc.__main__ import main

        with pytest.raises(RuntimeError, match="CLI error"):
            main()

    def test_module_docstring(self):
        """Test that the module documents itself."""
        assert "CLI entry point" in __main__.__doc__

    def test_module_execution_structure(self):
        """Test that the module is structured for python -m slice_alloc."""
        content = pathlib.Path(__main__.__file__).read_text()
        assert 'if __name__ == "__main__"' in content
        assert "main()" in content
