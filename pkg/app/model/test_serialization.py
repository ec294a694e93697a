"""Tests for parameter files."""

import struct
import tempfile
from pathlib import Path

import numpy as np

from app.model.errors import ParameterFileError
from app.model.predictor import init_predictor_params
from app.model.serialization import decode_params, encode_params, load_params, MAGIC, save_params
from tests.conftest import BaseTestCase, fake
from tests.fixtures import SMALL_MODEL, TINY_MODEL


class TestParameterFiles(BaseTestCase):
    """Test cases for encode_params, decode_params, save_params and load_params."""

    def setUp(self):
        """Set up parameters and metadata."""
        super().setUp()
        self.params = init_predictor_params(SMALL_MODEL, self.seed)
        self.metadata = {"predictor": SMALL_MODEL.model_dump(mode="json"), "seed": self.seed, "note": fake.word()}
        self.raw = encode_params(self.params, self.metadata)

    def test_save_and_load(self):
        """Test that a saved file loads back bit-identical with its metadata."""
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "params.bin"
            save_params(path, self.params, self.metadata)
            cfg, loaded, metadata = load_params(path)
        self.assertEqual(cfg, SMALL_MODEL)
        self.assertEqual(metadata, self.metadata)
        np.testing.assert_array_equal(loaded.to_vector(), self.params.to_vector())

    def test_header(self):
        """Test the magic and version at the start of the file."""
        self.assertTrue(self.raw.startswith(MAGIC))
        self.assertEqual(struct.unpack_from("<I", self.raw, len(MAGIC))[0], 1)

    def test_truncated(self):
        """Test that a truncated file reports the offset reached."""
        cut = len(self.raw) - 5
        with self.assertRaises(ParameterFileError) as raised:
            decode_params(self.raw[:cut])
        self.assertLessEqual(raised.exception.offset, cut)
        self.assertIn("truncated", raised.exception.message)

    def test_truncated_header(self):
        """Test truncation inside the shape table."""
        with self.assertRaises(ParameterFileError):
            decode_params(self.raw[:len(MAGIC) + 10])

    def test_bad_magic(self):
        """Test that another magic is refused at offset zero."""
        with self.assertRaises(ParameterFileError) as raised:
            decode_params(b"NOTPARMS" + self.raw[len(MAGIC):])
        self.assertEqual(raised.exception.offset, 0)

    def test_bad_version(self):
        """Test that an unknown version is refused."""
        altered = MAGIC + struct.pack("<I", 2) + self.raw[len(MAGIC) + 4:]
        with self.assertRaises(ParameterFileError) as raised:
            decode_params(altered)
        self.assertEqual(raised.exception.offset, len(MAGIC))

    def test_trailing_bytes(self):
        """Test that bytes after the payload are refused."""
        with self.assertRaises(ParameterFileError):
            decode_params(self.raw + b"\x00")

    def test_config_mismatch(self):
        """Test that a shape table disagreeing with the stored config is refused."""
        metadata = {"predictor": TINY_MODEL.model_dump(mode="json")}
        with self.assertRaises(ParameterFileError):
            decode_params(encode_params(self.params, metadata))

    def test_missing_predictor(self):
        """Test that metadata without a predictor config is refused."""
        with self.assertRaises(ParameterFileError):
            decode_params(encode_params(self.params, {"seed": 1}))

    def test_non_finite_payload(self):
        """Test that NaN values in the payload are refused."""
        groups = self.params.to_groups()
        groups["head_bias"] = np.array([np.nan])
        params = type(self.params).from_groups(groups)
        with self.assertRaises(ParameterFileError):
            decode_params(encode_params(params, self.metadata))

    def test_missing_file(self):
        """Test that an unreadable path is a parameter file error."""
        with tempfile.TemporaryDirectory() as directory:
            with self.assertRaises(ParameterFileError):
                load_params(Path(directory) / "absent.bin")
