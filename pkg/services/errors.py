"""
Exception hierarchy for the operadia engine.

Validators report failing axioms as data; these exceptions are reserved for
inputs that cannot be processed at all.
"""


class OperadiaError(Exception):
    """Base class for every engine error."""


class ShapeMismatchError(OperadiaError):
    """Matrix, graded-map or basis shapes do not compose."""


class TruncationError(OperadiaError):
    """Inconsistent or insufficient truncation, or the cell cap was exceeded."""


class ValidationError(OperadiaError):
    """A structure fails an axiom that its constructor requires."""


class MalformedInputError(OperadiaError):
    """An input payload could not be parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class UnsupportedError(OperadiaError):
    """The request falls outside the supported mode (for instance non-planar input)."""
