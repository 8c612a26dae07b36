"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """An argument violates an operation's precondition."""


class CapacityError(RuntimeError):
    """A brute-force routine was asked for an instance beyond its size cap."""


class FileFormatError(ValueError):
    """A schedule/model/code file is malformed (bad header, bad entry, truncation)."""
