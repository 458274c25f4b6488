"""Exception hierarchy shared by all hrbench modules."""


class HrbenchError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(HrbenchError):
    """Operand shapes are incompatible for the requested operation."""


class InputError(HrbenchError):
    """An argument is outside the operation's documented domain."""


class IngestionError(HrbenchError):
    """A series file is missing, malformed, or empty."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc += f" [{path}"
            if line is not None:
                loc += f":{line}"
            loc += "]"
        super().__init__(message + loc)


class InsufficientDataError(HrbenchError):
    """Series or window count too small for the requested operation."""


class DegenerateStatisticsError(HrbenchError):
    """Zero variance or zero range where a spread is required."""


class ConfigError(HrbenchError):
    """Unknown or inconsistent configuration value."""


class FitFailureError(HrbenchError):
    """An optimizer failed to converge; carries the best fit seen so far."""

    def __init__(self, message, best_fit=None):
        self.best_fit = best_fit
        super().__init__(message)


class TrainingDivergenceError(HrbenchError):
    """Loss or a gradient became non-finite during training."""

    def __init__(self, message, snapshot=None):
        self.snapshot = snapshot
        super().__init__(message)


class EvaluationError(HrbenchError):
    """Evaluation inputs are incomplete or inconsistent."""
