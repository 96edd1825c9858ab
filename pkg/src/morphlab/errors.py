"""Exception hierarchy shared by all morphlab modules."""


class MorphlabError(Exception):
    """Base class for all morphlab errors."""


class ConfigurationError(MorphlabError):
    """Invalid configuration value or precondition violation."""


class DimensionError(MorphlabError):
    """Shape or index mismatch between arrays."""


class NumericalFailureError(MorphlabError):
    """Non-finite value encountered during a numerical routine."""

    def __init__(self, message, layer_index=None):
        super().__init__(message)
        self.layer_index = layer_index


class NotReadyError(MorphlabError):
    """Queried state that has not accumulated enough data yet."""


class DegenerateFitError(MorphlabError):
    """Mixture fit is impossible (e.g. all input values identical)."""


class InsufficientDataError(MorphlabError):
    """Too few data points for the requested fit."""


class DatasetParseError(MorphlabError):
    """Malformed dataset file; carries the offending line number."""

    def __init__(self, message, line_number):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
