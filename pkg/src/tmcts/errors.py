"""Exception types shared across the package."""


class MalformedTree(ValueError):
    """Tree structure violates a GameTree invariant."""


class TreeSyntaxError(ValueError):
    """Tree or means document could not be parsed."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class DomainError(ValueError):
    """Argument lies outside the admissible domain of a function or family."""


class AssumptionViolated(ValueError):
    """Instance breaks a standing assumption (root value at the threshold, zero difficulty)."""


class RoundCapExceeded(RuntimeError):
    """A run did not stop within its round budget."""

    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"run exceeded the round cap of {cap}")
