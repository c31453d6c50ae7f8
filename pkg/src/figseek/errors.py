"""Exception hierarchy shared across the package."""


class FigseekError(Exception):
    """Base class for all package errors."""


class UserInputError(FigseekError):
    """Bad input data or configuration supplied by the caller.

    The CLI maps these to exit code 2; anything else is an internal
    error (exit code 1).
    """


class CorpusFormatError(UserInputError):
    """A corpus record failed parsing or validation.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
