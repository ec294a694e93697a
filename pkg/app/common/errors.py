"""Common error classes for the application."""


class ServiceError(Exception):
    """Base exception for every LTTD error."""

    message: str
    metadata: dict | None

    def __init__(self, message: str, metadata: dict | None = None) -> None:
        """Initialize service error.

        Args:
            message: Error message
            metadata: Optional error metadata (shapes, offsets, silo ids...)
        """
        super().__init__(message)
        self.message = message
        self.metadata = metadata


class ShapeError(ServiceError):
    """Error raised when tensor extents do not agree."""

    pass  # noqa: WPS420, WPS604


class ConfigError(ServiceError):
    """Error raised when a configuration value is invalid."""

    pass  # noqa: WPS420, WPS604


class FormatError(ServiceError):
    """Error raised when a file does not follow its documented format."""

    pass  # noqa: WPS420, WPS604
