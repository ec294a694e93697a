"""Desk-scale steering predictor built around the block."""
