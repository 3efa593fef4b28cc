"""
Exception hierarchy shared by all stableforms modules.

Every error raised on purpose derives from StableFormsError so callers
(the command line in particular) can map domain failures to one exit code.
"""

from __future__ import annotations

from typing import Optional


class StableFormsError(Exception):
    """Base class for domain errors."""


class DimensionError(StableFormsError, ValueError):
    """Operands live in different or unsupported vector spaces."""


class DegreeError(StableFormsError, ValueError):
    """A degree is out of range or operands have incompatible degrees."""


class NotStableError(StableFormsError):
    """The form is not in the open orbit required by the operation."""

    def __init__(self, message: str, stability_class: Optional[str] = None):
        super().__init__(message)
        # Classification tag of the offending form, when known
        self.stability_class = stability_class


class FormLiteralError(StableFormsError, ValueError):
    """A JSON form literal is malformed."""

    def __init__(self, message: str, position: Optional[str] = None):
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)
        self.position = position


class SingularStateError(StableFormsError):
    """A flow state left the domain where its right-hand side is defined."""


class ConfigError(StableFormsError):
    """Invalid configuration value (environment or integrator settings)."""


class CompatibilityError(StableFormsError):
    """An SU(3) pair fails the compatibility conditions an operation needs."""


class ParameterError(StableFormsError, ValueError):
    """A scalar, matrix or metric is outside the domain of an operation."""
