"""Exception hierarchy shared by all stages."""


class EvflowError(Exception):
    """Base class for every error raised by this package."""


class ParseError(EvflowError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(EvflowError, ValueError):
    pass


class OrderingError(EvflowError, ValueError):
    pass


class ParameterError(EvflowError, ValueError):
    pass


class GenerationError(EvflowError, ValueError):
    pass


class FlowFormatError(EvflowError, ValueError):
    pass


class StateError(EvflowError, ValueError):
    pass


class MetricError(EvflowError, ValueError):
    """A metric is undefined for the given input (e.g. empty evaluation set)."""


class ConfigError(EvflowError, ValueError):
    pass


class BudgetError(EvflowError, ValueError):
    pass


class PipelineError(EvflowError, RuntimeError):
    def __init__(self, message, window=None):
        self.window = window
        if window is not None:
            message = f"window {window}: {message}"
        super().__init__(message)
