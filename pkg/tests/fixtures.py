"""Shared test fixtures and factories."""

import numpy as np

from app.data.dtos import SyntheticConfig
from app.federated.dtos import TrainConfig
from app.lttd.block import ModalityTriple
from app.lttd.dtos import LttdConfig
from app.model.dtos import PredictorConfig, SampleBatch, SteeringSample

# Small configurations used across tests
TINY_MODEL = PredictorConfig(d_img=4, d1=2, d2=2, d3=2, n3=2, r_slices=1, d_z=2)
SMALL_MODEL = PredictorConfig(d_img=6, d1=4, d2=4, d3=4, n3=2, r_slices=2, d_z=4)
TINY_DATA = SyntheticConfig(n_sequences=4, seq_len=12, d_img=4, holdout_sequences=2, seed=3)
TINY_TRAIN = TrainConfig(u=2, b=4, alpha=0.01, rounds=6, eval_every=2, seed=3)


def create_block_config(
    counts: tuple[int, int, int] = (2, 3, 2),
    dims: tuple[int, int, int] = (4, 2, 4),
    r_slices: int = 2,
    d_z: int = 3,
    **overrides,
) -> LttdConfig:
    """Create an LttdConfig with test defaults.

    Args:
        counts: Channel counts (n1, n2, n3)
        dims: Channel dimensions (d1, d2, d3)
        r_slices: Slicing parameter
        d_z: Joint dimension
        overrides: Extra fields

    Returns:
        LttdConfig
    """
    return LttdConfig(
        n1=counts[0], n2=counts[1], n3=counts[2],
        d1=dims[0], d2=dims[1], d3=dims[2],
        r_slices=r_slices, d_z=d_z, **overrides,
    )


def create_inputs(rng: np.random.Generator, cfg: LttdConfig) -> ModalityTriple:
    """Random modality triple matching a block config."""
    return ModalityTriple(*(rng.normal(size=(count, dim)) for count, dim in zip(cfg.counts, cfg.dims)))


def create_sample(rng: np.random.Generator, d_img: int = 4, sequence_id: int = 0) -> SteeringSample:
    """Random valid steering sample."""
    return SteeringSample(
        current_image=rng.normal(size=d_img),
        past_frames=rng.normal(size=(5, d_img)),
        past_steering=rng.uniform(-1, 1, size=5),
        target_angle=float(rng.uniform(-1, 1)),
        sequence_id=sequence_id,
    )


def create_batch(rng: np.random.Generator, size: int = 3, d_img: int = 4) -> SampleBatch:
    """Random batch of steering samples."""
    return SampleBatch.stack([create_sample(rng, d_img) for _ in range(size)])


def zero_sample(d_img: int = 4) -> SteeringSample:
    """Sample with every feature and the target at zero."""
    return SteeringSample(
        current_image=np.zeros(d_img),
        past_frames=np.zeros((5, d_img)),
        past_steering=np.zeros(5),
        target_angle=0.0,
    )
