"""Exception types raised across the package."""


class MalformedCodeError(ValueError):
    """A parity-check matrix has an empty row or column, or is not binary."""


class ParameterError(ValueError):
    """Invalid ensemble, channel or algorithm parameter."""


class CapacityError(RuntimeError):
    """An exact enumeration was requested above the configured size limit."""


class PreconditionError(ValueError):
    """An operation was called on an input that violates its precondition."""


class SearchError(RuntimeError):
    """A bisection could not bracket its target."""


class ConfigError(ValueError):
    """Experiment configuration failed validation.

    ``path`` names the offending field, e.g. ``"noise.values[2]"``.
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
