"""Exception types raised across proxima.

All of them are ``ValueError`` subclasses so callers that only care about
"bad input" can keep catching ``ValueError``.
"""

from __future__ import annotations


class ProximaError(ValueError):
    """Base class for every proxima-specific error."""


class InstanceFormatError(ProximaError):
    """Malformed instance data: empty sets, dimension mismatch, unknown fields."""


class DomainError(ProximaError):
    """A point or parameter lies outside the domain an operation accepts."""


class ParamsError(ProximaError):
    """Invalid contraction, iteration or gallery parameters."""


class ParamsUnsupported(ProximaError):
    """The contractive condition defines no phi value for this combination."""


class PreconditionError(ProximaError):
    """An operation was called outside its documented precondition."""
