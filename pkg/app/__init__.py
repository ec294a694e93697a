"""LTTD - Lightweight temporal transformer decomposition with a federated training simulator."""

__version__ = "1.0.0"
