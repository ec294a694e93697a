"""Federated simulator errors."""

from app.common.errors import ServiceError


class TopologyError(ServiceError):
    """Error raised when a topology file is malformed or violates a graph rule."""

    pass  # noqa: WPS420, WPS604


class AggregationError(ServiceError):
    """Error raised when no silo can contribute to an aggregate."""

    pass  # noqa: WPS420, WPS604


class DivergenceError(ServiceError):
    """Error raised when a silo produces a non-finite loss or gradient."""

    pass  # noqa: WPS420, WPS604
