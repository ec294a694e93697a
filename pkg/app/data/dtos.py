"""DTOs for synthetic data and shards."""

from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field

from app.common.enums import ShardStrategy
from app.model.dtos import PAST_STEPS, SteeringSample

WINDOW = PAST_STEPS + 1


class SyntheticConfig(BaseModel):
    """Parameters of the synthetic steering generator."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_sequences: int = Field(40, ge=1, description="Number of driving sequences")
    seq_len: int = Field(40, ge=WINDOW, description="Steps per sequence (current + 5 past at least)")
    d_img: int = Field(16, ge=1, description="Frame feature dimension")
    noise_std: float = Field(0.05, ge=0.0, description="Gaussian frame noise")
    nonstationarity: float = Field(0.0, ge=0.0, description="Amplitude of the per-sequence angle drift")
    seed: int = Field(0, ge=0, description="Generator seed")
    holdout_sequences: int = Field(10, ge=1, description="Sequences in the held-out set")
    first_sequence: int = Field(0, ge=0, description="Id of the first generated sequence")
    strategy: ShardStrategy = Field(ShardStrategy.IID, description="How samples are split across silos")


@dataclass(frozen=True)
class Shard:
    """Samples owned by one silo."""

    silo_id: int
    samples: tuple[SteeringSample, ...]

    @property
    def size(self) -> int:
        """Number of samples."""
        return len(self.samples)
