"""Exception types shared across the package."""

from __future__ import annotations


class TriggenError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(TriggenError):
    """Tensor operands have incompatible shapes."""


class ContractError(TriggenError):
    """An API precondition was violated (bad argument, empty input, ...)."""


class NonFiniteError(TriggenError):
    """A NaN or Inf appeared where only finite values are valid."""


class ParseError(TriggenError):
    """A data file is malformed.

    Carries the source path and 1-based line number when known so CLI users
    can jump straight to the offending record.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(prefix + message)


class CheckpointError(TriggenError):
    """A checkpoint file is missing, truncated, or version-incompatible."""


class EmptyInputError(TriggenError):
    """An operation received an input with nothing to process."""
