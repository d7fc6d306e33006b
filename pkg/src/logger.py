"""
Structured logging module for the frame-measure laboratory.

Provides JSON-formatted logging with correlation ID support. Records go to
standard error so that reports written to standard output stay clean.
"""

import json
import logging
import sys
import uuid
import weakref
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from .config import config


_LEVELS = {
    "INFO": logging.INFO,
    "WARN": logging.WARNING,
    "ERROR": logging.ERROR,
}

# Live loggers, so that the CLI can raise the threshold everywhere at once.
_registry: "weakref.WeakSet[StructuredLogger]" = weakref.WeakSet()
_threshold: Optional[str] = None


class StructuredLogger:
    """
    Structured logger that outputs one JSON object per record.

    Supports correlation IDs for run tracing and different log levels.
    """

    def __init__(self, name: str = "frame-measure-lab", correlation_id: Optional[str] = None,
                 level: Optional[str] = None):
        """
        Initialize the structured logger.

        Args:
            name: Logger name
            correlation_id: Optional correlation ID for run tracing
            level: Threshold (INFO, WARN, ERROR); defaults to the configured level
        """
        self.logger = logging.getLogger(name)

        # Remove existing handlers to avoid duplicates
        for handler in self.logger.handlers[:]:
            self.logger.removeHandler(handler)

        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(JsonFormatter())

        self.logger.addHandler(handler)
        self.logger.propagate = False
        self.set_level(level or _threshold or config.log_level)

        # Set correlation ID
        self.correlation_id = correlation_id or str(uuid.uuid4())
        _registry.add(self)

    def _log(self, level: str, message: str, **kwargs) -> None:
        """
        Internal method to log structured messages.

        Args:
            level: Log level (INFO, WARN, ERROR)
            message: Log message
            **kwargs: Additional fields to include in log
        """
        if not self.logger.isEnabledFor(_LEVELS[level]):
            return

        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": level,
            "message": message,
            "correlation_id": self.correlation_id,
            **kwargs
        }

        self.logger.log(_LEVELS[level], json.dumps(log_data, default=str))

    def info(self, message: str, **kwargs) -> None:
        """Log an info message."""
        self._log("INFO", message, **kwargs)

    def warn(self, message: str, **kwargs) -> None:
        """Log a warning message."""
        self._log("WARN", message, **kwargs)

    def error(self, message: str, **kwargs) -> None:
        """Log an error message."""
        self._log("ERROR", message, **kwargs)

    def set_correlation_id(self, correlation_id: str) -> None:
        """Update the correlation ID for this logger instance."""
        self.correlation_id = correlation_id

    def set_level(self, level: str) -> None:
        """Change the threshold of this logger."""
        level = level.upper()
        if level not in _LEVELS:
            raise ValueError(f"Unknown log level: {level}")
        self.logger.setLevel(_LEVELS[level])
        for handler in self.logger.handlers:
            handler.setLevel(_LEVELS[level])


class JsonFormatter(logging.Formatter):
    """
    Custom formatter that outputs logs in JSON format.
    """

    def format(self, record: logging.LogRecord) -> str:
        """
        Format the log record as JSON.

        Args:
            record: The log record to format

        Returns:
            JSON formatted log string
        """
        # The message is already JSON from StructuredLogger._log
        return record.getMessage()


def get_logger(name: str = "frame-measure-lab", correlation_id: Optional[str] = None) -> StructuredLogger:
    """
    Factory function to get a structured logger instance.

    Args:
        name: Logger name
        correlation_id: Optional correlation ID for run tracing

    Returns:
        StructuredLogger instance
    """
    return StructuredLogger(name, correlation_id)


def set_log_level(level: str) -> None:
    """Apply a threshold to every live structured logger and to loggers created later."""
    global _threshold
    _threshold = level.upper()
    for structured in list(_registry):
        structured.set_level(_threshold)


def set_correlation_id(correlation_id: str) -> None:
    """Tag every live structured logger with a run's correlation id."""
    for structured in list(_registry):
        structured.set_correlation_id(correlation_id)
