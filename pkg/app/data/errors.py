"""Data errors."""

from app.common.errors import ServiceError


class ShardingError(ServiceError):
    """Error raised when samples cannot be partitioned across silos."""

    pass  # noqa: WPS420, WPS604
