"""Exception types shared across the package"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any


class TTVisionError(Exception):
    """Base class for all package errors"""


class ConfigError(TTVisionError):
    """Invalid or unreadable configuration"""


@dataclass(frozen=True)
class AnnotationIssue:
    """One problem found while validating an annotation manifest"""
    clip: str
    frame: int | None
    message: str

    def __str__(self) -> str:
        where = self.clip if self.frame is None else f"{self.clip}#{self.frame}"
        return f"{where}: {self.message}"


class AnnotationError(TTVisionError):
    """Annotation manifest failed validation"""

    def __init__(self, issues: list[AnnotationIssue]):
        self.issues = list(issues)
        summary = "; ".join(str(issue) for issue in self.issues[:5])
        if len(self.issues) > 5:
            summary += f" (+{len(self.issues) - 5} more)"
        super().__init__(summary or "invalid annotations")


class CheckpointError(TTVisionError):
    """Checkpoint could not be written or restored"""

    def __init__(self, reason: str, message: str):
        self.reason = reason
        super().__init__(f"{reason}: {message}")


class ResolutionMismatchError(TTVisionError):
    """Checkpoint and dataset/config resolutions disagree"""

    def __init__(self, expected: Any, actual: Any):
        self.expected = expected
        self.actual = actual
        super().__init__(f"checkpoint resolution {expected} does not match configured resolution {actual}")


class NonFiniteLossError(TTVisionError):
    """A training step produced a NaN or infinite loss"""

    def __init__(self, sample_ids: list[int], components: dict[str, float]):
        self.sample_ids = sample_ids
        self.components = components
        super().__init__(f"non-finite loss on samples {sample_ids}: {components}")


class InsufficientFramesError(TTVisionError):
    """Fewer frames than one input stack needs"""
