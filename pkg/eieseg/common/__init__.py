"""Common utilities, models, errors and configuration"""
from .config import AppConfig, get_config, reload_config
from .errors import DimensionError, DivergenceError, EieSegError, FormatError

__all__ = [
    "AppConfig",
    "get_config",
    "reload_config",
    "EieSegError",
    "DimensionError",
    "DivergenceError",
    "FormatError",
]
