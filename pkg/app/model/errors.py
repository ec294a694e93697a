"""Predictor errors."""

from app.common.errors import FormatError


class ParameterFileError(FormatError):
    """Error raised when a parameter file is corrupt; metadata carries the byte offset."""

    offset: int

    def __init__(self, message: str, offset: int, metadata: dict | None = None) -> None:
        """Initialize parameter file error.

        Args:
            message: Error message
            offset: Byte offset where decoding failed
            metadata: Optional error metadata
        """
        super().__init__(f"{message} (at byte offset {offset})", {**(metadata or {}), "offset": offset})
        self.offset = offset
