"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition (bad shapes, bad config keys, ...)."""


class FitDivergenceError(RuntimeError):
    """Raised when a least-squares circuit fit fails to make progress."""

    def __init__(self, message: str, coordinate: int | None = None):
        super().__init__(message)
        self.coordinate = coordinate
