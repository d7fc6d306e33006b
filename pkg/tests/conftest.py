"""
Shared fixtures for the test suite.
"""

import pytest

from src.logger import set_log_level


@pytest.fixture(autouse=True)
def reset_log_threshold():
    """Restore the INFO threshold after tests that run the CLI with --quiet."""
    yield
    set_log_level("INFO")
