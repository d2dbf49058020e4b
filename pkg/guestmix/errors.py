"""
Exception hierarchy shared by the library and the CLI.

``GuestmixError.exit_code`` is the process status the CLI returns for an
uncaught error of that type: 1 for usage problems, 2 for data problems.
"""

from __future__ import annotations


class GuestmixError(Exception):
    """Base class for all errors raised on purpose by guestmix."""

    exit_code = 2

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None and line is not None:
            location = f"{path}:{line}: "
        elif path is not None:
            location = f"{path}: "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")


class UsageError(GuestmixError):
    """Invalid command line, flag, or config value."""

    exit_code = 1


class DataError(GuestmixError):
    """Input data is missing, malformed, or inconsistent."""

    exit_code = 2


class MissingArtifactError(DataError):
    pass


class RecordParseError(DataError):
    pass


class EmbeddingFormatError(DataError):
    pass


class LexiconError(DataError):
    pass


class AnnotationError(DataError):
    pass


class PoolExhaustedError(DataError):
    pass


class CheckpointError(DataError):
    pass


class CoordinateError(DataError):
    pass


class MetricsError(DataError):
    pass


class SingleClassError(DataError):
    """Training data contains only one class."""


class TrainingDivergedError(GuestmixError):
    """Loss became NaN or infinite during training."""

    exit_code = 2


class ZeroVectorError(ValueError):
    """Cosine similarity requested for a zero vector."""


class NotFittedError(RuntimeError):
    """A transform or predict call happened before fit."""


class OutOfVocabularyError(KeyError):
    """Query word is not in the embedding vocabulary."""


class GradientCheckError(GuestmixError):
    """Analytic gradients disagree with finite differences."""

    exit_code = 2
