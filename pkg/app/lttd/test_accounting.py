"""Tests for parameter accounting."""

from app.lttd.accounting import gcd_divisors, param_count, sweep_slices
from app.lttd.dtos import LttdConfig
from tests.conftest import BaseTestCase


class TestParamCount(BaseTestCase):
    """Test cases for param_count and the slicing sweep."""

    def test_toy_scale(self):
        """Test that decomposition costs more than the full tensor at toy scale."""
        counted = param_count(LttdConfig(n1=1, n2=1, n3=1, d1=2, d2=2, d3=2, r_slices=1, d_z=2))
        self.assertEqual(counted.full_tensor_params, 16)
        self.assertEqual(counted.decomposed_params, 32)
        self.assertEqual(counted.decomposition_rate, 0.5)

    def test_large_scale(self):
        """Test six channels of width 64, R = 32 and d_z = 1024."""
        counted = param_count(LttdConfig(n1=6, n2=6, n3=6, d1=64, d2=64, d3=64, r_slices=32, d_z=1024))
        self.assertEqual(counted.full_tensor_params, 384 ** 3 * 1024)
        self.assertEqual(counted.full_tensor_params, 57_982_058_496)
        self.assertEqual(counted.decomposed_params, 209_152)
        self.assertGreater(counted.decomposition_rate, 1000)

    def test_exact_integers(self):
        """Test that counts stay exact integers near 2^50."""
        counted = param_count(LttdConfig(n1=64, n2=64, n3=64, d1=64, d2=64, d3=64, r_slices=64, d_z=4096))
        self.assertEqual(counted.full_tensor_params, 4096 ** 3 * 4096)
        self.assertIsInstance(counted.full_tensor_params, int)

    def test_sweep_lists_gcd_divisors(self):
        """Test that the sweep covers every divisor of gcd(d1, d2, d3)."""
        cfg = LttdConfig(n1=1, n2=1, n3=1, d1=12, d2=18, d3=6, r_slices=1, d_z=4)
        self.assertEqual(gcd_divisors(cfg), [1, 2, 3, 6])
        swept = sweep_slices(cfg)
        self.assertEqual([r_slices for r_slices, _ in swept], [1, 2, 3, 6])
        decomposed = [counted.decomposed_params for _, counted in swept]
        self.assertEqual(decomposed, sorted(decomposed, reverse=True))
