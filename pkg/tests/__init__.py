"""Tests package for Azkaban service."""
