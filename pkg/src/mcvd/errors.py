"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad shapes, out-of-range hyperparameters, unknown keys."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class UndefinedGapError(ValueError):
    """Raised when a value table has no second-largest distinct value."""


class TrainingAborted(RuntimeError):
    """A loss or parameter became non-finite during training."""
