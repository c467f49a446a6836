"""
Exception hierarchy shared by the library modules and the command-line entry point
"""
from typing import Optional


class VqsdError(Exception):
    """Base class for every error raised by this package"""


class InvalidArgumentError(VqsdError, ValueError):
    """A precondition on an argument was violated"""


class DatasetParseError(VqsdError, ValueError):
    """A dataset file could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(VqsdError):
    """An experiment configuration is missing, unreadable or invalid"""


class TrainingError(VqsdError):
    """Training produced an unusable result"""

    def __init__(self, message: str, fold: Optional[int] = None):
        self.fold = fold
        if fold is not None:
            message = f"fold {fold}: {message}"
        super().__init__(message)
