"""Lightweight temporal transformer decomposition block."""
