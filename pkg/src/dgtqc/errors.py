"""Exception hierarchy shared by all modules."""


class DgtError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(DgtError, ValueError):
    """An argument is outside the operation's domain."""


class DegenerateError(ArgumentError):
    """Input has no spread (constant variable, zero-total distribution)."""


class SingularityError(DgtError, ArithmeticError):
    """Design matrix is rank deficient."""


class ParseError(DgtError, ValueError):
    """Malformed input text (XML, JSON line, CSV row)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FieldError(ParseError):
    """A required field is missing or not a valid number."""


class GeometryError(ArgumentError):
    """Bounding box corners are inverted or degenerate."""


class UnknownReferenceError(DgtError, KeyError):
    """A record refers to an id that does not exist in the corpus."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ConflictError(DgtError, ValueError):
    """The same item was given two values."""


class InsufficientTailError(ArgumentError):
    """No xmin candidate leaves enough tail points to fit a power law."""


class InstabilityError(DgtError, RuntimeError):
    """Too many bootstrap replicates failed to re-fit."""


class BoxIndexError(DgtError, IndexError):
    """A verification row points past the end of a labeling's boxes."""
