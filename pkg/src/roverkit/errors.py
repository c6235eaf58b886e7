"""Exception types shared across the package."""


class DataError(ValueError):
    """Bad input data: malformed files, broken invariants, missing records.

    The CLI maps this family to exit code 2.
    """


class FormatError(DataError):
    """A record or line that cannot be parsed; names the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DuplicateRecordError(DataError):
    """Two records share a key that must be unique."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no
