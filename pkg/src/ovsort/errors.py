"""Exception hierarchy shared by every ovsort module."""

from __future__ import annotations


class OvsortError(Exception):
    """Base class for all library errors."""


class UsageError(OvsortError, ValueError):
    """An operation was called with arguments that break its preconditions."""


class CapacityError(OvsortError):
    """A buffer is too small, or a request exceeds addressable memory."""


class ParameterError(OvsortError, ValueError):
    """Invalid sorting / sampling parameters for the given input size."""


class KeyFileFormatError(OvsortError):
    """Malformed key file: bad magic, truncated payload, zero-length keys."""


class VerificationError(OvsortError, AssertionError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message if index is None else f"{message} (first offending index {index})")
        self.index = index
