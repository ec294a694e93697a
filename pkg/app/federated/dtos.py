"""DTOs for the training simulator."""

from dataclasses import dataclass, field, replace

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.common.enums import ConsensusWeights, LearningScenario, OptimizerName, StepSchedule
from app.common.errors import ConfigError
from app.common.rng import stream
from app.data.dtos import Shard


class TrainConfig(BaseModel):
    """Schedule, optimizer and scenario of a simulated run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    u: int = Field(4, ge=1, description="Local updates between averaging rounds")
    b: int = Field(16, ge=1, description="Mini-batch size")
    alpha: float = Field(0.05, ge=0.0, description="Base step size")
    schedule: StepSchedule = Field(StepSchedule.CONSTANT, description="Step-size schedule alpha_k")
    rounds: int = Field(300, ge=0, description="Total lockstep rounds")
    mode: LearningScenario = Field(LearningScenario.DFL, description="CLL, SFL or DFL")
    seed: int = Field(0, ge=0, description="Run seed")
    optimizer: OptimizerName = Field(OptimizerName.SGD, description="Local optimizer")
    consensus: ConsensusWeights = Field(ConsensusWeights.METROPOLIS, description="Consensus matrix construction")
    in_neighbor_threshold: int = Field(1, ge=0, description="A silo averages iff |N_i+| exceeds this")
    participation: tuple[int, ...] | None = Field(None, description="lambda_i per silo; all ones when unset")
    clip_norm: float = Field(10.0, gt=0.0, description="L2 clipping bound of a silo gradient")
    head_only: bool = Field(False, description="Freeze everything but the regression head")
    eval_every: int = Field(10, ge=1, description="Rounds between evaluations")
    patience: int = Field(0, ge=0, description="Evaluations without improvement before stopping; 0 disables")
    record_wall_time: bool = Field(False, description="Measure wall_ms instead of writing 0")

    @field_validator("participation", mode="before")
    @classmethod
    def _parse_participation(cls, participation_value: object) -> object:
        if isinstance(participation_value, str):
            parts = [part.strip() for part in participation_value.split(",") if part.strip()]
            return tuple(int(part) for part in parts) or None
        return participation_value

    @field_validator("participation")
    @classmethod
    def _check_participation(cls, participation_value: tuple[int, ...] | None) -> tuple[int, ...] | None:
        if participation_value is not None:
            if any(flag not in {0, 1} for flag in participation_value):
                raise ValueError("participation flags must be 0 or 1")
            if not any(participation_value):
                raise ValueError("at least one silo must participate")
        return participation_value

    def step_size(self, round_index: int) -> float:
        """alpha_k for round k >= 1."""
        if self.schedule == StepSchedule.INVERSE_SQRT:
            return self.alpha / float(np.sqrt(max(round_index, 1)))
        return self.alpha

    def is_averaging_round(self, round_index: int) -> bool:
        """k = 0 (mod u + 1)."""
        return round_index % (self.u + 1) == 0

    def lambdas(self, n_silos: int) -> tuple[int, ...]:
        """Participation flags for n silos.

        Raises:
            ConfigError: If the mask length does not match the silo count
        """
        if self.participation is None:
            return (1,) * n_silos
        if len(self.participation) != n_silos:
            raise ConfigError(
                f"participation has {len(self.participation)} flags for {n_silos} silos",
                {"participation": len(self.participation), "silos": n_silos},
            )
        return self.participation


@dataclass(frozen=True)
class SiloState:
    """One silo's parameters, data and optimizer state."""

    silo_id: int
    theta: np.ndarray
    shard: Shard
    seed: int
    participation: int = 1
    optimizer_state: np.ndarray | None = None
    averaging_steps: int = 0
    gradient_steps: int = 0

    def batch_rng(self, round_index: int) -> np.random.Generator:
        """Private stream keyed by (seed, silo, round)."""
        return stream(self.seed, "batch", self.silo_id, round_index)

    def evolve(self, **changes) -> "SiloState":
        """Copy with changed fields."""
        return replace(self, **changes)


class MetricsRow(BaseModel):
    """One evaluation of the global model."""

    round: int = Field(..., description="Round index k")
    global_rmse: float = Field(..., description="RMSE of the FedAvg model on held-out data")
    global_mae: float = Field(..., description="MAE of the FedAvg model on held-out data")
    mean_silo_loss: float = Field(..., description="Mean over silos of the local training loss")
    wall_ms: int = Field(0, description="Elapsed milliseconds, 0 unless measured")
    silo_losses: tuple[float, ...] = Field((), description="Training loss of every silo")


@dataclass
class MetricsHistory:
    """Evaluation rows of a run plus its final state."""

    rows: list[MetricsRow] = field(default_factory=list)
    global_theta: np.ndarray | None = None
    states: list[SiloState] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def last(self) -> MetricsRow:
        """Most recent evaluation."""
        return self.rows[-1]
