"""Exception types shared across the package."""

from __future__ import annotations


class PathPoolError(Exception):
    """Base class for all pathpool errors."""


class ParseError(PathPoolError, ValueError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EntityLookupError(PathPoolError, LookupError):
    """An entity label does not resolve in the store."""

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"unknown entity: {label!r}")


class ScoringError(PathPoolError, ValueError):
    """A scorer backend cannot produce a score (e.g. missing embedding)."""


class EmptyInputError(PathPoolError, ValueError):
    """An operation that requires a non-empty sequence received an empty one."""


class ConfigError(PathPoolError, ValueError):
    """Invalid configuration or unusable input files."""


class TransportError(PathPoolError, RuntimeError):
    """The generation endpoint could not be reached after all retries."""


class EndpointError(PathPoolError, RuntimeError):
    """The generation endpoint answered with a non-2xx status."""

    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        excerpt = body[:200].replace("\n", " ")
        super().__init__(f"endpoint returned {status}: {excerpt}")
