"""Correntropy-weighted value decomposition for cooperative multi-agent Q-learning."""

from .config import TrainingConfig, parse_config
from .errors import ConfigError, TrainingAborted, UndefinedGapError
from .training import train_run

__all__ = [
    "ConfigError",
    "TrainingAborted",
    "TrainingConfig",
    "UndefinedGapError",
    "parse_config",
    "train_run",
]
__version__ = "0.1.0"
