"""Valued-field stratification toolkit over truncated Puiseux series."""
from .gamma import Gamma
from .puiseux import PSeries, RVClass, T

__all__ = ["Gamma", "PSeries", "RVClass", "T"]
__version__ = "0.1.0"
