"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands whose dimensions do not conform."""


class NumericError(ArithmeticError):
    """A NaN or Inf was produced or consumed; never ignored silently."""


class ContractError(ValueError):
    """A caller violated an operation's precondition."""


class ConfigError(ValueError):
    """An invalid or unknown configuration value."""


class LoadError(ValueError):
    """A dataset directory that cannot be parsed into a valid bundle."""


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss); carries the failing step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
