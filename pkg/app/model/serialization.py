"""Binary parameter files.

Layout, all integers little-endian:

    magic          8 bytes  b"LTTDPARM"
    version        u32      1
    group count    u32
    per group      u16 name length, UTF-8 name, u8 ndim, ndim x u32 extents
    metadata       u32 length, UTF-8 JSON object
    payload        float64 values of every group, row-major, in table order
"""

import json
import logging
from pathlib import Path
import struct

import numpy as np

from app.common.errors import ConfigError
from app.model.dtos import PredictorConfig
from app.model.errors import ParameterFileError
from app.model.predictor import group_shapes, PredictorParams

logger = logging.getLogger(__name__)

MAGIC = b"LTTDPARM"
FORMAT_VERSION = 1
FLOAT_BYTES = 8


class _Reader:
    """Cursor over a byte string that reports the offset of every failure."""

    def __init__(self, raw: bytes) -> None:
        self.raw = raw
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.raw):
            raise ParameterFileError(f"File truncated while reading {what}", offset=self.offset)
        chunk = self.raw[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def encode_params(params: PredictorParams, metadata: dict) -> bytes:
    """Serialize params and a JSON metadata block.

    Args:
        params: Predictor parameters
        metadata: JSON-serializable object, must carry a ``predictor`` config

    Returns:
        File contents
    """
    groups = params.to_groups()
    header = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(groups))]
    for name, array in groups.items():
        encoded_name = name.encode("utf-8")
        header.append(struct.pack("<H", len(encoded_name)))
        header.append(encoded_name)
        header.append(struct.pack(f"<B{array.ndim}I", array.ndim, *array.shape))
    encoded_metadata = json.dumps(metadata, sort_keys=True).encode("utf-8")
    header.append(struct.pack("<I", len(encoded_metadata)))
    header.append(encoded_metadata)
    payload = [np.ascontiguousarray(array, dtype="<f8").tobytes() for array in groups.values()]
    return b"".join(header + payload)


def decode_params(raw: bytes) -> tuple[PredictorConfig, PredictorParams, dict]:
    """Parse and validate a parameter file.

    Returns:
        (predictor config, params, full metadata)

    Raises:
        ParameterFileError: On a bad magic, version, shape table or payload length
    """
    reader = _Reader(raw)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        raise ParameterFileError("Not an LTTD parameter file", offset=0)
    version_offset = reader.offset
    version, group_count = reader.unpack("<II", "header")
    if version != FORMAT_VERSION:
        raise ParameterFileError(f"Unsupported format version {version}", offset=version_offset)

    table: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(group_count):
        (name_length,) = reader.unpack("<H", "group name length")
        name_offset = reader.offset
        try:
            name = reader.take(name_length, "group name").decode("utf-8")
        except UnicodeDecodeError as decode_error:
            raise ParameterFileError("Group name is not UTF-8", offset=name_offset) from decode_error
        (ndim,) = reader.unpack("<B", "group rank")
        table.append((name, reader.unpack(f"<{ndim}I", "group extents")))

    (metadata_length,) = reader.unpack("<I", "metadata length")
    metadata_offset = reader.offset
    try:
        metadata = json.loads(reader.take(metadata_length, "metadata").decode("utf-8"))
        config = PredictorConfig.model_validate(metadata["predictor"])
    except (ValueError, KeyError, TypeError) as metadata_error:
        raise ParameterFileError(
            f"Invalid metadata block: {metadata_error}", offset=metadata_offset,
        ) from metadata_error

    try:
        expected = list(group_shapes(config).items())
    except ConfigError as config_error:
        raise ParameterFileError(config_error.message, offset=metadata_offset) from config_error
    if table != expected:
        raise ParameterFileError(
            "Shape table does not match the stored predictor config", offset=metadata_offset,
        )

    groups = {}
    for name, dims in table:
        count = int(np.prod(dims))
        chunk = reader.take(count * FLOAT_BYTES, f"payload of {name}")
        groups[name] = np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(dims)
    if reader.offset != len(raw):
        raise ParameterFileError("Trailing bytes after payload", offset=reader.offset)
    values = np.concatenate([array.reshape(-1) for array in groups.values()])
    if not np.all(np.isfinite(values)):
        raise ParameterFileError("Payload holds non-finite values", offset=reader.offset)
    return config, PredictorParams.from_groups(groups), metadata


def save_params(path: Path, params: PredictorParams, metadata: dict) -> None:
    """Write a parameter file."""
    Path(path).write_bytes(encode_params(params, metadata))
    logger.info("Saved parameters to %s", path)


def load_params(path: Path) -> tuple[PredictorConfig, PredictorParams, dict]:
    """Read a parameter file written by save_params."""
    try:
        raw = Path(path).read_bytes()
    except OSError as read_error:
        raise ParameterFileError(f"Cannot read {path}: {read_error.strerror}", offset=0) from read_error
    return decode_params(raw)
