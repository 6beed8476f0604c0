"""Exception types raised across the package."""


class InvalidInput(ValueError):
    """Input data or arguments violate a documented precondition."""


class SingularCovariance(ArithmeticError):
    """The sample covariance matrix is numerically singular.

    Under the null hypothesis this is a probability-zero event, so test
    runners map it to an outright rejection.
    """

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class CorruptCalibration(ValueError):
    """A calibration object or file is internally inconsistent."""


class NumericLimit(ArithmeticError):
    """A numerical routine could not reach its accuracy target."""


class SpecParseError(InvalidInput):
    """A distribution spec string could not be parsed.

    Attributes
    ----------
    position : int
        Zero-based character offset where parsing failed.
    """

    def __init__(self, message, text, position):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position


class CsvParseError(InvalidInput):
    """A sample file could not be read; ``row`` and ``column`` are 1-based."""

    def __init__(self, message, row, column=None):
        where = f"row {row}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {message}")
        self.row = row
        self.column = column
