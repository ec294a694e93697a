"""Shared errors, enums, settings and random streams."""
