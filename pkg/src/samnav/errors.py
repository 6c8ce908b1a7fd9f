"""Exception types shared across the package."""


class DomainError(Exception):
    """Base class for recoverable, user-facing errors (CLI exit code 1)."""


class ConstraintError(DomainError):
    """A scene action map violates its structural constraints."""


class FormatError(DomainError):
    """A file or document does not match its declared schema."""


class UnknownEdgeError(DomainError):
    """An edge was referenced that does not exist in the graph."""


class InfeasibleSpecError(DomainError):
    """A generator or route request cannot be satisfied."""
