"""Proximal-gradient training of quantized models, with baselines and theory checks."""

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    DomainError,
    InvalidCodebookError,
    NumericError,
    ProxlabError,
    UnsupportedOperationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DimensionError",
    "DomainError",
    "InvalidCodebookError",
    "NumericError",
    "ProxlabError",
    "UnsupportedOperationError",
]
