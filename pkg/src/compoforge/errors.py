"""Exception hierarchy shared across the pipeline.

Every error raised on bad input data derives from ValidationError so the
CLI can map it to a single exit code. I/O problems are left to the builtin
OSError family and mapped separately.
"""

from __future__ import annotations


class CompoforgeError(Exception):
    """Base class for all package errors."""


class ValidationError(CompoforgeError):
    """Input data violates a documented contract."""


class ManifestError(ValidationError):
    """A JSONL manifest failed to parse or validate.

    Carries the file path and 1-based line number when the failure is
    attributable to a specific line.
    """

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = path
            if line is not None:
                prefix += f":{line}"
            prefix += ": "
        super().__init__(prefix + message)


class OptimizationError(CompoforgeError):
    """Both optimizer routes failed to produce a finite result."""


class AnnotationError(CompoforgeError):
    """A guidance annotation request failed after exhausting retries."""

    def __init__(self, message: str, *, pair_id: str | None = None, attempts: int | None = None):
        self.pair_id = pair_id
        self.attempts = attempts
        super().__init__(message)


class ConfigError(ValidationError):
    """Configuration file or value is unusable."""
