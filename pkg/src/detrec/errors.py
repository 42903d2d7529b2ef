"""Exception hierarchy shared by the simulator, checkers and CLI."""


class DetrecError(Exception):
    """Base class for all errors raised by detrec."""


class ConfigurationError(DetrecError):
    """An object or run was configured inconsistently (unknown cell, bad CAS target, ...)."""


class ModelViolation(DetrecError):
    """A harness or test drove the model outside its rules.

    This signals a bug in the caller (e.g. touching another process's private
    cell, announcing while an operation is in flight), never an algorithm bug.
    """


class ScheduleError(DetrecError):
    """A schedule directive cannot be applied in the current system state."""

    def __init__(self, index: int, message: str) -> None:
        super().__init__(f"directive {index}: {message}")
        self.index = index


class BoundsExceeded(DetrecError):
    """Exhaustive exploration refused because the bounds are too large."""

    def __init__(self, message: str, estimate: int) -> None:
        super().__init__(f"{message} (estimated states: {estimate:.3g})")
        self.estimate = estimate


class TraceFormatError(DetrecError):
    """A serialized trace could not be parsed."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class MalformedHistory(DetrecError):
    """A history violates event well-formedness (unmatched or duplicated events)."""

    def __init__(self, seq: int, message: str) -> None:
        super().__init__(f"event {seq}: {message}")
        self.seq = seq
