from __future__ import annotations


class MVSSError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(MVSSError, ValueError):
    """Inputs violate a documented precondition."""


class ConfigError(MVSSError):
    """Bad run configuration or unreadable input."""


class CoverViolationError(MVSSError):
    """Some simplex of the global complex lies in no cover patch."""


class InternalConsistencyError(MVSSError):
    """A step that theory guarantees to succeed failed (e.g. an unsolvable lift)."""
