"""
Exception types raised by the laboratory.

All of them are ValueError subclasses, so callers that only care about bad
input can keep catching ValueError.
"""

from typing import Optional


class FrameLabError(ValueError):
    """Base class for laboratory errors."""


class StructuralError(FrameLabError):
    """Inputs do not fit together: shapes, groups or function domains disagree."""


class DomainError(FrameLabError):
    """A mathematical requirement on the inputs fails (absolute continuity, empty support)."""


class PreconditionError(FrameLabError):
    """A theorem's hypothesis is violated in a way that makes the check meaningless."""


class ScenarioError(FrameLabError):
    """A scenario file violates the schema; `path` names the offending field."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
