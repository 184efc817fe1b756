"""Exception hierarchy shared by all proxlab modules."""


class ProxlabError(Exception):
    """Base class for every error raised by proxlab."""


class DimensionError(ProxlabError, ValueError):
    pass


class InvalidCodebookError(ProxlabError, ValueError):
    pass


class DomainError(ProxlabError, ValueError):
    """Input lies outside the region where an operator is defined."""


class UnsupportedOperationError(ProxlabError, TypeError):
    pass


class NumericError(ProxlabError, ArithmeticError):
    """Non-finite values appeared during evaluation.

    ``layer`` is the index of the offending layer when known.
    """

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class DataError(ProxlabError, ValueError):
    pass


class ConfigError(ProxlabError, ValueError):
    pass
