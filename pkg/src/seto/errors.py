"""Exception hierarchy shared by every module of the package."""


class SetoError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class InvalidParam(SetoError, ValueError):
    exit_code = 1


class SequenceTooShort(SetoError, ValueError):
    pass


class SequenceTooLong(SetoError, ValueError):
    pass


class ParseError(SetoError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDataset(SetoError, ValueError):
    pass


class CatalogTooSmall(SetoError, ValueError):
    pass


class TruthMissing(SetoError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "truth item missing"


class NumericalError(SetoError, ArithmeticError):
    exit_code = 3
