"""Exception hierarchy for the powermod package."""


class PowermodError(Exception):
    """Base class for all powermod errors."""


class EmptyDatasetError(PowermodError):
    """Raised when an operation requires at least one vector/sample."""


class SchemaMismatchError(PowermodError):
    """Raised when data does not conform to the expected counter schema."""


class TraceFormatError(PowermodError):
    """Malformed trace file; carries the file path and 1-based line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class InvalidIntervalError(PowermodError):
    """Sampling interval length is not positive."""


class CounterWrapError(PowermodError):
    """A cumulative counter or energy reading decreased within an interval."""


class DivergenceError(PowermodError):
    """Iterative training diverged; carries the epoch index."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class LineageError(PowermodError):
    """Two artifacts that must share a dataset lineage do not."""


class ConfigError(PowermodError):
    """Invalid or inconsistent configuration."""


class StageError(PowermodError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage, message):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
