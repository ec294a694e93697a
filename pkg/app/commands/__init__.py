"""Command surfaces dispatched by handler.py."""
