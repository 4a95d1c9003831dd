# errors.py
"""Exception hierarchy shared by the library modules, the CLI and the API."""

from typing import Optional


class OrbitGapError(Exception):
    """Base class for every error raised on purpose by this package."""

    exit_code = 1


class DomainError(OrbitGapError, ValueError):
    """A parameter or point lies outside the domain of an operation."""

    exit_code = 2


class LengthError(DomainError):
    """A sequence or environment window is too short for the request."""


class UsageError(DomainError):
    """Malformed command-line input (bad file contents, bad flag combination)."""


class FitError(DomainError):
    """Too few usable points for a least-squares slope."""


class SearchError(OrbitGapError):
    """A fast search found a length it could not back with a witness pair."""


class SolverError(OrbitGapError):
    """A root finder could not bracket a sign change."""

    exit_code = 5


class ConvergenceError(OrbitGapError):
    """Transfer-operator quotients failed to settle."""

    exit_code = 5

    def __init__(self, message: str, residuals: Optional[list] = None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class ResourceLimitError(OrbitGapError):
    """A configured ceiling (enumeration size, sequence cap) was exceeded."""

    exit_code = 4


def exit_code_for(exc: BaseException) -> int:
    """CLI exit code: 2 usage, 3 I/O, 4 resource, 5 numerical non-convergence."""
    if isinstance(exc, OrbitGapError):
        return exc.exit_code
    # pydantic.ValidationError subclasses ValueError
    if isinstance(exc, ValueError):
        return 2
    if isinstance(exc, OSError):
        return 3
    return 1
