class NetclustError(Exception):
    """Base class for all netclust errors."""


class DataError(NetclustError):
    """Raised when input data violates a contract (bad CSV, shape mismatch,
    unseen category, degenerate policy outcome)."""
