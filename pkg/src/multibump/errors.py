"""Exception types shared across the solver stack."""

from __future__ import annotations


class MultibumpError(Exception):
    """Base class for all library errors."""


class ConfigError(MultibumpError):
    """Invalid or incomplete run configuration."""


class ConvergenceError(MultibumpError):
    """An iterative linear or eigenvalue solve exhausted its iteration cap.

    Carries the residual that was actually achieved so callers can decide
    whether to retry with a looser tolerance.
    """

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateComponentError(MultibumpError):
    """A signed component required to be nontrivial vanished.

    ``which`` identifies the offending part ("tilde+", "tilde-", "hat+").
    """

    def __init__(self, message: str, which: str | None = None):
        super().__init__(message)
        self.which = which


class FiberRootError(MultibumpError):
    """A scalar fiber equation has no admissible positive root."""


class StagnationError(MultibumpError):
    """Backtracking exhausted with no active constraint and a large gradient."""

    def __init__(self, message: str, trace: list | None = None):
        super().__init__(message)
        self.trace = trace or []
