"""Exception hierarchy shared by all treediff modules."""


class TreeDiffError(Exception):
    """Base class for every error raised by this package."""


class AddressError(TreeDiffError, ValueError):
    """A vertex address is not valid for the tree shape in use."""


class RangeError(TreeDiffError, OverflowError):
    """A count or dimension exceeds the supported range."""

    def __init__(self, message, max_safe=None):
        super().__init__(message)
        self.max_safe = max_safe


class EvaluationError(TreeDiffError, ValueError):
    """A function or expression could not be evaluated."""

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class WeightDomainError(TreeDiffError, ValueError):
    """A weight took a nonpositive (or non-finite) value."""


class UnboundedOperatorError(TreeDiffError, ArithmeticError):
    """A boundedness criterion diverged past the configured cap."""

    def __init__(self, message, depth=None, value=None):
        super().__init__(message)
        self.depth = depth
        self.value = value


class ParseError(TreeDiffError, ValueError):
    """Syntax error in a textual form, carrying the byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
