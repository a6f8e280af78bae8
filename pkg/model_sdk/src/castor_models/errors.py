class ModelError(Exception):
    """Base for model-side failures reported over the wire protocol."""


class NoData(ModelError):
    """The context has no history in the requested window."""


class InsufficientHistory(ModelError):
    """Not enough aligned history to materialize the feature lags."""


class UnknownSourceContext(ModelError):
    """A transformation's source context is missing or not bound."""
