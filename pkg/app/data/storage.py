"""CSV dump and load of sample sets.

Column order: silo, sequence, target, past_steering_0..4,
current_0..{d-1}, past_frame_{t}_{f} for t in 0..4 and f in 0..d-1.
"""

import csv
import logging
from pathlib import Path

import numpy as np

from app.common.errors import FormatError
from app.data.dtos import Shard
from app.model.dtos import PAST_STEPS, SteeringSample

logger = logging.getLogger(__name__)

FIXED_COLUMNS = ("silo", "sequence", "target")


def sample_columns(d_img: int) -> list[str]:
    """Header row for a given frame width."""
    columns = list(FIXED_COLUMNS)
    columns.extend(f"past_steering_{step}" for step in range(PAST_STEPS))
    columns.extend(f"current_{feature}" for feature in range(d_img))
    columns.extend(
        f"past_frame_{step}_{feature}" for step in range(PAST_STEPS) for feature in range(d_img)
    )
    return columns


def _row(silo_id: int, sample: SteeringSample) -> list[str]:
    values = [sample.target_angle, *sample.past_steering, *sample.current_image, *sample.past_frames.ravel()]
    return [str(silo_id), str(sample.sequence_id), *(repr(float(value)) for value in values)]


def dump_samples(path: Path, shards: list[Shard]) -> None:
    """Write every shard's samples, one row per sample, in shard order."""
    if not shards or not shards[0].samples:
        raise FormatError("Nothing to dump", {"shards": len(shards)})
    d_img = shards[0].samples[0].current_image.shape[0]
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(sample_columns(d_img))
        for silo_shard in shards:
            writer.writerows(_row(silo_shard.silo_id, sample) for sample in silo_shard.samples)
    logger.info("Dumped %d shards to %s", len(shards), path)


def load_samples(path: Path) -> list[Shard]:
    """Read a CSV written by dump_samples back into shards.

    Raises:
        FormatError: On a malformed header or row
    """
    with Path(path).open(newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise FormatError("Empty sample file", {"path": str(path)})
    header = rows[0]
    d_img = (len(header) - len(FIXED_COLUMNS) - PAST_STEPS) // (PAST_STEPS + 1)
    if d_img < 1 or header != sample_columns(d_img):
        raise FormatError("Unexpected sample file header", {"path": str(path)})
    buckets: dict[int, list[SteeringSample]] = {}
    for line_number, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"Row {line_number} has {len(row)} columns", {"line": line_number})
        try:
            silo_id, sequence_id = int(row[0]), int(row[1])
            values = np.array([float(cell) for cell in row[2:]])
        except ValueError as parse_error:
            raise FormatError(f"Row {line_number} is not numeric", {"line": line_number}) from parse_error
        steering_end = 1 + PAST_STEPS
        current_end = steering_end + d_img
        buckets.setdefault(silo_id, []).append(SteeringSample(
            current_image=values[steering_end:current_end],
            past_frames=values[current_end:].reshape(PAST_STEPS, d_img),
            past_steering=values[1:steering_end],
            target_angle=float(values[0]),
            sequence_id=sequence_id,
        ))
    return [Shard(silo_id=silo_id, samples=tuple(bucket)) for silo_id, bucket in sorted(buckets.items())]
