"""Exception hierarchy. Each class carries the CLI exit code it maps to."""

from __future__ import annotations


class QMixedError(Exception):
    exit_code = 1


class ParseError(QMixedError):
    """Malformed input record or file."""

    exit_code = 2


class ValidationError(QMixedError, ValueError):
    """Input is well-formed but violates a mathematical contract."""

    exit_code = 3


class DimensionError(ValidationError):
    pass


class ResourceError(QMixedError):
    """Requested job exceeds a hard size cap."""

    exit_code = 4


class VerificationError(QMixedError):
    exit_code = 5
