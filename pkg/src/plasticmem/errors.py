"""Exception types shared across the package."""


class PlasticmemError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(PlasticmemError, ValueError):
    """A caller passed a value that violates an operation's contract."""


class InvalidStateError(PlasticmemError, RuntimeError):
    """An operation was invoked on an object in the wrong state."""


class DataLoadError(PlasticmemError):
    """A dataset file could not be parsed; the message names file and line."""
