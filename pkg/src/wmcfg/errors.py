"""Shared exception types."""


class UsageError(ValueError):
    """A caller violated a contract: bad argument, mixed algebras, ill-sorted input."""


class ParseError(UsageError):
    """Malformed input text (grammar file, partition file, weight literal)."""


class DecodeError(UsageError):
    """A word could not be decoded back into a derivation."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"position {position}: {message}"
        super().__init__(message)
        self.position = position
