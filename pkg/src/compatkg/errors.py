"""Exception types shared across the package."""

from __future__ import annotations


class CompatKgError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(CompatKgError):
    """Caller passed arguments that violate an operation's contract."""


class SchemaError(CompatKgError):
    """An input file does not match its declared schema (e.g. bad header)."""


class RuleParseError(CompatKgError):
    """A rule body could not be parsed; carries an optional text offset."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class QuerySyntaxError(CompatKgError):
    """Query text failed to parse; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class QueryValidationError(CompatKgError):
    """Query parsed but references unknown variables or properties."""


class ReadOnlyViolation(CompatKgError):
    """Query contains a write clause; carries the offending keyword."""

    def __init__(self, keyword: str):
        super().__init__(f"write clause not permitted: {keyword}")
        self.keyword = keyword


class ConsistencyError(CompatKgError):
    """A graph batch or document references ids that do not exist."""

    def __init__(self, message: str, offenders: list[str] | None = None):
        super().__init__(message)
        self.offenders = offenders or []


class NotFoundError(CompatKgError):
    """Lookup by id failed."""


class DocumentParseError(CompatKgError):
    """An imported graph or store document is malformed."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{message} at {location}")
        self.location = location


class TransportError(CompatKgError):
    """An HTTP call to the model endpoint failed (retryable)."""


class NoGraphError(CompatKgError):
    """The service has no graph snapshot loaded; ingest first."""
