"""Exception hierarchy for dataset, schema, and numeric-domain failures."""


class StrucmlError(Exception):
    """Base class for all package errors."""


class SchemaError(StrucmlError):
    """Header or column set does not match the declared schema."""


class ParseError(StrucmlError):
    """A cell could not be parsed as a number."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class ValidationError(StrucmlError):
    """Parsed data violates an invariant (non-finite value, bad shape, ...)."""


class DomainError(StrucmlError):
    """Input lies outside a formula's or operation's mathematical domain."""


class UnsupportedMethodError(StrucmlError):
    """Operation is not defined for this model kind."""
