"""Analysis and simulation of a multi-class link under a downgrading admission policy."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DowngradingError,
    NumericalError,
    RegimeError,
    ValidationError,
)
from .model import ModelParams, Region, classify, fixed_point, validate

__all__ = [
    "ConfigError",
    "DowngradingError",
    "ModelParams",
    "NumericalError",
    "RegimeError",
    "Region",
    "ValidationError",
    "__version__",
    "classify",
    "fixed_point",
    "validate",
]
