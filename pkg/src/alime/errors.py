"""Exception hierarchy shared across the package."""


class AlimeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(AlimeError, ValueError):
    """Invalid parameter, unknown schema or inconsistent inputs."""


class MalformedInputError(AlimeError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateColumnError(AlimeError, ValueError):
    pass


class InsufficientDataError(AlimeError, ValueError):
    pass


class ShapeError(AlimeError, ValueError):
    pass


class NumericOverflowError(AlimeError, FloatingPointError):
    pass


class TrainingDivergedError(AlimeError, RuntimeError):
    def __init__(self, epoch, loss=None):
        detail = "non-finite activations" if loss is None else f"loss={loss}"
        super().__init__(f"training diverged at epoch {epoch} ({detail})")
        self.epoch = epoch
        self.loss = loss


class SingularFitError(AlimeError, ArithmeticError):
    pass
