"""Exception types shared across the package."""


class WSobolevError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(WSobolevError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedCaseError(WSobolevError):
    """A parameter combination the closed forms do not cover."""


class DegenerateFieldError(WSobolevError, ValueError):
    """A field has zero norm where a nonzero one is required."""


class ShotFailed(WSobolevError):
    """An initial-value shot left the positive cone or overflowed.

    ``location`` is the radius where the shot was stopped.
    """

    def __init__(self, message: str, location: float):
        super().__init__(message)
        self.location = location


class NoSolution(WSobolevError):
    """The shooting search found no positive solution."""


class Stagnation(WSobolevError):
    """A descent iteration could not make progress."""
