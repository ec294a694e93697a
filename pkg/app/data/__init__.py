"""Synthetic temporal driving data and silo sharding."""
