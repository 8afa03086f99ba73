"""Exception types shared across the trainer."""
from __future__ import annotations


class TrainerError(Exception):
    """Base class for everything this package raises on purpose."""


class ConfigError(TrainerError):
    """A training configuration or checkpoint is unusable as given."""


class DataError(TrainerError):
    """A corpus file cannot be read or carries no usable labels."""
