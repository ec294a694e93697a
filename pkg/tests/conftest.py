"""Test configuration and utilities."""

import unittest

import numpy as np
from faker import Faker

from app.common.rng import stream
from app.tensor.core import max_relative_error

fake = Faker()


class BaseTestCase(unittest.TestCase):
    """Base test case with a seeded generator and tolerance assertions."""

    def setUp(self):
        """Set up test fixtures."""
        self.seed = fake.pyint(min_value=0, max_value=10_000)
        self.rng = stream(self.seed, "tests", self.id())

    def assertRelativeClose(self, actual, expected, tolerance: float):  # noqa: N802
        """Assert the normwise relative error is within tolerance."""
        error = max_relative_error(np.asarray(actual), np.asarray(expected))
        self.assertLessEqual(error, tolerance, f"relative error {error:.3e} exceeds {tolerance:.0e}")
