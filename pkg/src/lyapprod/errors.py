"""Exception hierarchy shared by all modules.

Two branches matter for callers: ValidationError for rejected inputs or
configuration (the CLI maps it to exit code 2) and NumericalError for
failures that arise while computing (exit code 1). Everything raised by
this package derives from LyapError so library users can catch one type.
"""

from __future__ import annotations


class LyapError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(LyapError, ValueError):
    """Bad argument, config file, or model specification."""


class NumericalError(LyapError, RuntimeError):
    """Computation failed: divergence, no root, degenerate data."""


class ConvergenceError(NumericalError):
    """Iterative solver exhausted its budget without meeting tolerance."""
