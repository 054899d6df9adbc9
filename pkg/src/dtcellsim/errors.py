"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario or trainer configuration is inconsistent or unusable."""


class ContractViolation(RuntimeError):
    """A caller broke an interface precondition (bad action, shape mismatch, ...)."""


class TraceFormatError(ValueError):
    """A trace file failed validation; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CheckpointError(RuntimeError):
    """A checkpoint file is unreadable, truncated, or from an unknown format version."""
