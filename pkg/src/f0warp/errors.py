"""Exceptions shared across modules."""


class DomainError(ValueError):
    """An argument is outside the domain an operation is defined on."""


class TooShort(ValueError):
    """The signal is shorter than one analysis window."""
