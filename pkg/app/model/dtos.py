"""DTOs for the steering predictor."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.common.enums import AttentionNormalization, Modality
from app.common.errors import ShapeError
from app.lttd.dtos import LttdConfig

PAST_STEPS = 5


class PredictorConfig(BaseModel):
    """Embedding sizes, block extents and the modality set of the predictor."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    d_img: int = Field(16, ge=1, description="Frame feature dimension")
    d1: int = Field(8, ge=1, description="Past-frame channel dimension")
    d2: int = Field(8, ge=1, description="Steering-series channel dimension")
    d3: int = Field(8, ge=1, description="Current-image channel dimension")
    n3: int = Field(4, ge=1, description="Channels the current-image embedding is split into")
    r_slices: int = Field(2, ge=1, description="Slicing parameter R")
    d_z: int = Field(16, ge=1, description="Joint representation dimension")
    normalize_attention: AttentionNormalization = Field(
        AttentionNormalization.SOFTMAX, description="Attention normalization used for training",
    )
    modalities: tuple[Modality, ...] = Field(
        (Modality.PAST_FRAMES, Modality.STEERING_SERIES, Modality.CURRENT_IMAGE),
        description="Modalities fed to the block; excluded ones become a constant channel",
    )

    @field_validator("modalities", mode="before")
    @classmethod
    def _parse_modalities(cls, modalities_value: object) -> object:
        if isinstance(modalities_value, str):
            return tuple(part.strip() for part in modalities_value.split(",") if part.strip())
        return modalities_value

    @field_validator("modalities")
    @classmethod
    def _require_current_image(cls, modalities_value: tuple[Modality, ...]) -> tuple[Modality, ...]:
        if Modality.CURRENT_IMAGE not in modalities_value:
            raise ValueError("current_image is mandatory")
        # canonical order keeps configs comparable
        return tuple(modality for modality in Modality if modality in modalities_value)

    def uses(self, modality: Modality) -> bool:
        """Whether a modality is fed to the block."""
        return modality in self.modalities

    def lttd_config(self) -> LttdConfig:
        """Block configuration implied by the predictor."""
        return LttdConfig(
            n1=PAST_STEPS if self.uses(Modality.PAST_FRAMES) else 1,
            n2=PAST_STEPS if self.uses(Modality.STEERING_SERIES) else 1,
            n3=self.n3,
            d1=self.d1,
            d2=self.d2,
            d3=self.d3,
            r_slices=self.r_slices,
            d_z=self.d_z,
            normalize_attention=self.normalize_attention,
        )


@dataclass(frozen=True)
class SteeringSample:
    """One chunk: current image, 5 previous frames, 5 past steering angles and the target."""

    current_image: np.ndarray
    past_frames: np.ndarray
    past_steering: np.ndarray
    target_angle: float
    sequence_id: int = 0

    def __post_init__(self) -> None:
        """Validate window shapes and ranges."""
        current = np.asarray(self.current_image, dtype=np.float64)
        frames = np.asarray(self.past_frames, dtype=np.float64)
        steering = np.asarray(self.past_steering, dtype=np.float64)
        if current.ndim != 1 or frames.shape != (PAST_STEPS, current.shape[0]):
            raise ShapeError("Frames must be 5 rows of the current-image width", {"frames": frames.shape})
        if steering.shape != (PAST_STEPS,):
            raise ShapeError("Exactly 5 past steering values are required", {"steering": steering.shape})
        values = np.concatenate([current, frames.ravel(), steering, [self.target_angle]])
        if not np.all(np.isfinite(values)):
            raise ShapeError("Sample values must be finite", {"sequence_id": self.sequence_id})
        if not -1.0 <= self.target_angle <= 1.0:
            raise ShapeError("Target angle must lie in [-1, 1]", {"target": self.target_angle})
        object.__setattr__(self, "current_image", current)
        object.__setattr__(self, "past_frames", frames)
        object.__setattr__(self, "past_steering", steering)
        object.__setattr__(self, "target_angle", float(self.target_angle))


@dataclass(frozen=True)
class SampleBatch:
    """Samples stacked along a leading axis."""

    current_image: np.ndarray
    past_frames: np.ndarray
    past_steering: np.ndarray
    targets: np.ndarray

    @classmethod
    def stack(cls, samples: Sequence[SteeringSample]) -> "SampleBatch":
        """Stack samples in order."""
        if not samples:
            raise ShapeError("A batch needs at least one sample", {"size": 0})
        return cls(
            current_image=np.stack([sample.current_image for sample in samples]),
            past_frames=np.stack([sample.past_frames for sample in samples]),
            past_steering=np.stack([sample.past_steering for sample in samples]),
            targets=np.array([sample.target_angle for sample in samples]),
        )

    @property
    def size(self) -> int:
        """Number of samples."""
        return self.targets.shape[0]

    def take(self, indices: np.ndarray) -> "SampleBatch":
        """Sub-batch of the given rows, in the given order."""
        return SampleBatch(
            current_image=self.current_image[indices],
            past_frames=self.past_frames[indices],
            past_steering=self.past_steering[indices],
            targets=self.targets[indices],
        )


class RegressionMetrics(BaseModel):
    """RMSE and MAE of a batch of predictions."""

    rmse: float = Field(..., description="Root mean squared error")
    mae: float = Field(..., description="Mean absolute error")
