"""Exception hierarchy shared by all modules.

Each class maps to one CLI exit code: ValidationError -> 1,
NumericalError -> 2, ParseError (and other I/O failures) -> 3.
"""


class CospaceError(Exception):
    pass


class ValidationError(CospaceError):
    """Bad arguments or inconsistent inputs (shapes, ranges, labels)."""


class NumericalError(CospaceError):
    """Singular / rank-deficient / non-finite linear algebra."""


class ParseError(CospaceError):
    """Malformed data file; carries the offending line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line
