"""Pytest configuration and shared fixtures."""

# Import all fixtures from the fixtures module to make them available
from tests.fixtures.scenarios import *  # noqa: F401, F403
