"""Exception types. The CLI maps these onto exit codes."""


class DataError(ValueError):
    """Bad input data (schema, row contents, missing files)."""


class SchemaError(DataError):
    def __init__(self, column: str, message: str | None = None):
        self.column = column
        super().__init__(message or f"missing required column {column!r}")


class RowError(DataError):
    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class ShapeError(ValueError):
    """Layer shapes do not chain."""


class NumericError(ArithmeticError):
    """Non-finite values appeared during training or inference."""
