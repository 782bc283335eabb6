"""Exception types shared across the package."""


class ChebcnnError(Exception):
    pass


class ShapeError(ChebcnnError, ValueError):
    """Tensor/matrix dimensions do not conform."""


class StructuralError(ChebcnnError, ValueError):
    """Invalid graph structure (bad vertex index, malformed edge list)."""


class ParameterError(ChebcnnError, ValueError):
    """Out-of-range argument (negative rate, bad permutation, ...)."""


class ConfigError(ChebcnnError, ValueError):
    """Invalid model or experiment configuration."""


class DataFormatError(ChebcnnError, ValueError):
    """Malformed dataset file; message carries file name and line number."""


class TrainingError(ChebcnnError, RuntimeError):
    """Training diverged (NaN loss); carries the epoch index."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class NumericalError(ChebcnnError, RuntimeError):
    """Numerical routine failed (e.g. eigendecomposition did not converge)."""
