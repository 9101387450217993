class CapacityError(ValueError):
    """Raised when a request exceeds a hard enumeration or size cap."""


class ModelFormatError(ValueError):
    """Malformed model or parameter file.

    ``line`` and ``column`` are 1-based when known, else ``None``.
    """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column
