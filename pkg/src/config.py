"""
Configuration management module for the frame-measure laboratory.

This module reads solver and verifier defaults from environment variables and
validates them. Nothing is required; every variable has a default.
"""

import os
from typing import Optional


LOG_LEVELS = ('INFO', 'WARN', 'ERROR')


class Config:
    """Configuration class that manages environment variables with defaults."""

    def __init__(self):
        """Initialize configuration by reading environment variables."""
        self._restarts = self._get_int('FRAMELAB_RESTARTS', 32)
        self._max_iterations = self._get_int('FRAMELAB_MAX_ITERATIONS', 500)
        self._tolerance = self._get_float('FRAMELAB_TOLERANCE', 1e-11)
        self._workers = self._get_int('FRAMELAB_WORKERS', 1)
        self._exact_tolerance = self._get_float('FRAMELAB_EXACT_TOLERANCE', 1e-9)
        self._heuristic_slack = self._get_float('FRAMELAB_HEURISTIC_SLACK', 1e-3)
        self._log_level = (self._get_env_var('FRAMELAB_LOG_LEVEL', 'INFO') or 'INFO').upper()

        # Validate configuration
        self._validate_config()

    @property
    def restarts(self) -> int:
        """Default number of solver restarts."""
        return self._restarts

    @property
    def max_iterations(self) -> int:
        """Default iteration cap per restart."""
        return self._max_iterations

    @property
    def tolerance(self) -> float:
        """Default relative convergence tolerance."""
        return self._tolerance

    @property
    def workers(self) -> int:
        """Threads used to run solver restarts."""
        return self._workers

    @property
    def exact_tolerance(self) -> float:
        """Relative tolerance used by verifiers on the exact (p=q=2) path."""
        return self._exact_tolerance

    @property
    def heuristic_slack(self) -> float:
        """Relative slack before a heuristic verifier reports a violation."""
        return self._heuristic_slack

    @property
    def log_level(self) -> str:
        """Threshold for structured loggers."""
        return self._log_level

    def _get_env_var(self, key: str, default: Optional[str]) -> Optional[str]:
        """Get environment variable with optional default value."""
        value = os.environ.get(key, default)
        return value.strip() if value else value

    def _get_int(self, key: str, default: int) -> int:
        raw = self._get_env_var(key, None)
        if not raw:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{key} must be an integer, got {raw!r}")

    def _get_float(self, key: str, default: float) -> float:
        raw = self._get_env_var(key, None)
        if not raw:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"{key} must be a number, got {raw!r}")

    def _validate_config(self) -> None:
        """Validate configuration values."""
        if self._restarts < 1:
            raise ValueError("FRAMELAB_RESTARTS must be at least 1")

        if self._max_iterations < 1:
            raise ValueError("FRAMELAB_MAX_ITERATIONS must be at least 1")

        if not self._tolerance > 0:
            raise ValueError("FRAMELAB_TOLERANCE must be positive")

        if self._workers < 1:
            raise ValueError("FRAMELAB_WORKERS must be at least 1")

        if not self._exact_tolerance > 0:
            raise ValueError("FRAMELAB_EXACT_TOLERANCE must be positive")

        if not self._heuristic_slack > 0:
            raise ValueError("FRAMELAB_HEURISTIC_SLACK must be positive")

        if self._log_level not in LOG_LEVELS:
            raise ValueError(f"FRAMELAB_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")


# Global configuration instance
config = Config()
