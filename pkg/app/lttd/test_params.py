"""Tests for block configuration, parameters and initialization."""

import numpy as np

from app.common.errors import ConfigError, ShapeError
from app.lttd.params import fan_bound, GROUP_NAMES, init_params, LttdParams, zeros_like
from tests.conftest import BaseTestCase, fake
from tests.fixtures import create_block_config


class TestLttdConfig(BaseTestCase):
    """Test cases for LttdConfig validation."""

    def test_slices_must_divide(self):
        """Test that R must divide every channel dimension."""
        with self.assertRaises(ConfigError):
            create_block_config(dims=(4, 6, 4), r_slices=4)

    def test_slice_dims(self):
        """Test the per-slice widths."""
        self.assertEqual(create_block_config(dims=(8, 4, 2), r_slices=2).slice_dims, (4, 2, 1))


class TestInitParams(BaseTestCase):
    """Test cases for init_params."""

    def test_deterministic(self):
        """Test that the same seed gives bit-identical parameters."""
        cfg = create_block_config()
        first, second = init_params(cfg, self.seed), init_params(cfg, self.seed)
        for name in GROUP_NAMES:
            np.testing.assert_array_equal(getattr(first, name), getattr(second, name))

    def test_seeds_differ(self):
        """Test that different seeds change at least 99% of entries."""
        cfg = create_block_config(dims=(8, 8, 8), r_slices=2, d_z=8)
        other_seed = self.seed + fake.pyint(min_value=1, max_value=1000)
        first = init_params(cfg, self.seed).to_groups()
        second = init_params(cfg, other_seed).to_groups()
        total = sum(array.size for array in first.values())
        differing = sum(int(np.count_nonzero(first[name] != second[name])) for name in GROUP_NAMES)
        self.assertGreaterEqual(differing / total, 0.99)

    def test_fan_bounds(self):
        """Test that every entry lies within its fan bound."""
        cfg = create_block_config(dims=(8, 4, 8), r_slices=4, d_z=5)
        params = init_params(cfg, self.seed)
        for name, extent, width in zip(("w1", "w2", "w3"), cfg.dims, cfg.slice_dims):
            self.assertLessEqual(np.max(np.abs(getattr(params, name))), fan_bound(extent, width))
        slice_a, slice_b, slice_c = cfg.slice_dims
        self.assertLessEqual(np.max(np.abs(params.cores)), fan_bound(slice_a, slice_b * slice_c))
        for name, extent in zip(("wz1", "wz2", "wz3"), cfg.dims):
            self.assertLessEqual(np.max(np.abs(getattr(params, name))), fan_bound(extent, cfg.d_z))

    def test_shapes_follow_config(self):
        """Test the stacked group shapes."""
        cfg = create_block_config(dims=(4, 2, 4), r_slices=2, d_z=3)
        params = init_params(cfg, self.seed)
        self.assertEqual(params.w1.shape, (2, 4, 2))
        self.assertEqual(params.w2.shape, (2, 2, 1))
        self.assertEqual(params.cores.shape, (2, 2, 1, 2))
        self.assertEqual(params.wz3.shape, (4, 3))
        params.check_config(cfg)

    def test_prefix_separates_streams(self):
        """Test that two label prefixes give different parameters."""
        cfg = create_block_config()
        np.testing.assert_raises(
            AssertionError,
            np.testing.assert_array_equal,
            init_params(cfg, self.seed).wz1,
            init_params(cfg, self.seed, prefix="other").wz1,
        )


class TestLttdParams(BaseTestCase):
    """Test cases for LttdParams shape checks and helpers."""

    def test_inconsistent_factor(self):
        """Test that a factor not matching its core is refused."""
        params = init_params(create_block_config(), self.seed)
        groups = params.to_groups()
        groups["w1"] = groups["w1"][:, :, :1]
        with self.assertRaises(ShapeError):
            LttdParams.from_groups(groups)

    def test_check_config_mismatch(self):
        """Test that params from another config are refused."""
        params = init_params(create_block_config(d_z=3), self.seed)
        with self.assertRaises(ShapeError):
            params.check_config(create_block_config(d_z=4))

    def test_zeros_like(self):
        """Test that zeros_like keeps shapes and zeroes entries."""
        params = init_params(create_block_config(), self.seed)
        zeros = zeros_like(params)
        for name in GROUP_NAMES:
            self.assertEqual(getattr(zeros, name).shape, getattr(params, name).shape)
            self.assertFalse(np.any(getattr(zeros, name)))
