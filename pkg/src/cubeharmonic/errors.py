"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Input dimension exceeds what a dense representation allows."""


class PreconditionError(ValueError):
    """Input violates a documented precondition of the operation."""


class ParameterError(ValueError):
    """A numeric parameter lies outside its admissible range."""


class ConfigurationError(ValueError):
    """A numerical rule is not fine enough for the requested computation."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
