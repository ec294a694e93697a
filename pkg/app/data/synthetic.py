"""Synthetic steering sequences.

Each sequence has a smooth ground-truth angle trajectory. The frame at time t
is a fixed linear map of the angles at t and t+1 plus noise, so past frames
carry information about the current target.
"""

import logging

import numpy as np

from app.common.enums import ShardStrategy
from app.common.rng import stream
from app.data.dtos import Shard, SyntheticConfig, WINDOW
from app.data.errors import ShardingError
from app.model.dtos import PAST_STEPS, SteeringSample

logger = logging.getLogger(__name__)

SINUSOIDS = 3
AMPLITUDE = 0.3
MIN_FREQUENCY = 0.01
MAX_FREQUENCY = 0.1


def frame_map(cfg: SyntheticConfig) -> np.ndarray:
    """Fixed d_img x 2 map from (angle_t, angle_t+1) to frame features."""
    return stream(cfg.seed, "frame_map").normal(0.0, 1.0, size=(cfg.d_img, 2)) / np.sqrt(cfg.d_img)


def steering_trajectory(cfg: SyntheticConfig, sequence_id: int) -> np.ndarray:
    """Angles for steps 0..seq_len of one sequence, clipped to [-1, 1]."""
    rng = stream(cfg.seed, "trajectory", sequence_id)
    frequencies = rng.uniform(MIN_FREQUENCY, MAX_FREQUENCY, size=SINUSOIDS)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=SINUSOIDS)
    drift = cfg.nonstationarity * rng.uniform(-1.0, 1.0)
    steps = np.arange(cfg.seq_len + 1, dtype=np.float64)[:, None]
    waves = AMPLITUDE * np.sin(2.0 * np.pi * frequencies * steps + phases)
    return np.clip(waves.sum(axis=1) + drift, -1.0, 1.0)


def _sequence_samples(cfg: SyntheticConfig, sequence_id: int, mapping: np.ndarray) -> list[SteeringSample]:
    angles = steering_trajectory(cfg, sequence_id)
    pairs = np.stack([angles[:-1], angles[1:]], axis=1)
    frames = pairs @ mapping.T
    if cfg.noise_std > 0:
        frames = frames + stream(cfg.seed, "noise", sequence_id).normal(0.0, cfg.noise_std, size=frames.shape)
    return [
        SteeringSample(
            current_image=frames[step],
            past_frames=frames[step - PAST_STEPS:step],
            past_steering=angles[step - PAST_STEPS:step],
            target_angle=float(angles[step]),
            sequence_id=sequence_id,
        )
        for step in range(PAST_STEPS, cfg.seq_len)
    ]


def generate(cfg: SyntheticConfig) -> list[SteeringSample]:
    """Slide a 6-step window with stride 1 over every sequence.

    Args:
        cfg: Generator configuration

    Returns:
        n_sequences * (seq_len - 5) samples, sequence by sequence
    """
    mapping = frame_map(cfg)
    samples: list[SteeringSample] = []
    for sequence_id in range(cfg.first_sequence, cfg.first_sequence + cfg.n_sequences):
        samples.extend(_sequence_samples(cfg, sequence_id, mapping))
    logger.debug("Generated %d samples from %d sequences", len(samples), cfg.n_sequences)
    return samples


def windows_per_sequence(cfg: SyntheticConfig) -> int:
    """Number of samples one sequence yields."""
    return cfg.seq_len - WINDOW + 1


def holdout_config(cfg: SyntheticConfig) -> SyntheticConfig:
    """Config of the held-out set: same frame map, the sequences after the training ones."""
    return cfg.model_copy(update={
        "n_sequences": cfg.holdout_sequences,
        "first_sequence": cfg.first_sequence + cfg.n_sequences,
    })


def shard(
    samples: list[SteeringSample], n_silos: int, strategy: ShardStrategy, seed: int,
) -> list[Shard]:
    """Partition samples across silos.

    iid shuffles globally then deals round-robin; by_sequence deals whole
    sequences round-robin after shuffling the sequence order.

    Raises:
        ShardingError: If some silo would end up empty
    """
    if n_silos < 1 or n_silos > len(samples):
        raise ShardingError(
            f"Cannot split {len(samples)} samples across {n_silos} silos",
            {"samples": len(samples), "silos": n_silos},
        )
    rng = stream(seed, "shard", strategy.value)
    if strategy == ShardStrategy.IID:
        order = rng.permutation(len(samples))
        return [
            Shard(silo_id=silo_id, samples=tuple(samples[index] for index in order[silo_id::n_silos]))
            for silo_id in range(n_silos)
        ]

    sequence_ids = sorted({sample.sequence_id for sample in samples})
    if n_silos > len(sequence_ids):
        raise ShardingError(
            f"Cannot split {len(sequence_ids)} sequences across {n_silos} silos",
            {"sequences": len(sequence_ids), "silos": n_silos},
        )
    shuffled = [sequence_ids[index] for index in rng.permutation(len(sequence_ids))]
    owner = {sequence_id: position % n_silos for position, sequence_id in enumerate(shuffled)}
    buckets: list[list[SteeringSample]] = [[] for _ in range(n_silos)]
    for sample in samples:
        buckets[owner[sample.sequence_id]].append(sample)
    return [Shard(silo_id=silo_id, samples=tuple(bucket)) for silo_id, bucket in enumerate(buckets)]
