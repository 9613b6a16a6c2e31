"""Exception hierarchy shared by every nilmkit module."""

from typing import Optional


class NilmError(ValueError):
    """Base class for all toolkit errors."""

    kind = "NilmError"


class ShapeError(NilmError):
    """A tensor dimension does not match what a layer or operation expects."""

    kind = "ShapeError"

    def __init__(self, message: str, dimension: Optional[str] = None,
                 expected: Optional[object] = None, actual: Optional[object] = None):
        self.dimension = dimension
        self.expected = expected
        self.actual = actual
        if dimension is not None:
            message = f"{message} ({dimension}: expected {expected}, got {actual})"
        super().__init__(message)


class ParseError(NilmError):
    """A dataset file could not be parsed."""

    kind = "ParseError"

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class SyncError(NilmError):
    """Appliance channels disagree on their timestamps."""

    kind = "SyncError"


class DataError(NilmError):
    """Input data is empty, too short, constant, or otherwise unusable."""

    kind = "DataError"


class ConfigError(NilmError):
    """Configuration file or flag value is invalid."""

    kind = "ConfigError"


class CheckpointError(NilmError):
    """Checkpoint file is malformed or does not fit the requested network."""

    kind = "CheckpointError"


class TrainingDivergedError(NilmError):
    """Loss became NaN or infinite during training."""

    kind = "TrainingDivergedError"

    def __init__(self, epoch: int, batch: int, parameter_norm: float):
        self.epoch = epoch
        self.batch = batch
        self.parameter_norm = parameter_norm
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch} "
            f"(parameter norm {parameter_norm:.6g})"
        )
