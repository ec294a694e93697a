"""Local gradient steps, DPASGD rounds and FedAvg aggregation."""

from concurrent.futures import Executor
import logging
from typing import Callable, Iterable, Sequence

import numpy as np

from app.common.enums import OptimizerName
from app.common.errors import ShapeError
from app.federated.dtos import SiloState, TrainConfig
from app.federated.errors import AggregationError, DivergenceError
from app.federated.topology import ConsensusMatrix
from app.model.dtos import PredictorConfig, SampleBatch
from app.model.metrics import mse_loss
from app.model.predictor import from_vector, group_shapes, loss_gradient, predict_batch

logger = logging.getLogger(__name__)

RMSPROP_DECAY = 0.9
RMSPROP_EPS = 1e-8
HEAD_GROUPS = ("head_weight", "head_bias")


def weighted_average(weights: Sequence[float], thetas: Sequence[np.ndarray]) -> np.ndarray:
    """sum_j w_j theta_j accumulated in ascending j over the non-zero weights.

    Weights are assumed to sum to one; when every contributing theta is the
    same vector that vector is returned exactly.

    Raises:
        AggregationError: If no weight is non-zero
        ShapeError: If thetas differ in length
    """
    contributing = [(weight, theta) for weight, theta in zip(weights, thetas) if weight != 0]
    if not contributing:
        raise AggregationError("No silo contributes to the average", {"silos": len(thetas)})
    first = contributing[0][1]
    if any(theta.shape != first.shape for _, theta in contributing):
        lengths = sorted({theta.shape[0] for _, theta in contributing})
        raise ShapeError("Silo parameter vectors differ in length", {"lengths": lengths})
    if all(np.array_equal(theta, first) for _, theta in contributing[1:]):
        return first.copy()
    accumulator = np.zeros_like(first)
    for weight, theta in contributing:
        accumulator += weight * theta
    return accumulator


def fedavg_aggregate(states: Sequence[SiloState]) -> np.ndarray:
    """Unweighted mean of the participating silos' thetas.

    Raises:
        AggregationError: If no silo participates
    """
    participants = sum(state.participation for state in states)
    if participants == 0:
        raise AggregationError("No participating silo to aggregate", {"silos": len(states)})
    share = 1.0 / participants
    return weighted_average([share * state.participation for state in states], [state.theta for state in states])


def _map_silos(executor: Executor | None, work: Callable, items: Iterable) -> list:
    if executor is None:
        return [work(item) for item in items]
    return list(executor.map(work, items))


class LocalTrainer:
    """Gradient steps of one silo on its own shard."""

    def __init__(self, predictor_cfg: PredictorConfig, train_cfg: TrainConfig) -> None:
        """Initialize the trainer.

        Args:
            predictor_cfg: Model configuration shared by every silo
            train_cfg: Step size, batch size, clipping and optimizer
        """
        self.predictor_cfg = predictor_cfg
        self.train_cfg = train_cfg
        self._mask = self._head_mask() if train_cfg.head_only else None
        self._stacked: dict[int, SampleBatch] = {}

    def _head_mask(self) -> np.ndarray:
        pieces = [
            np.full(int(np.prod(dims)), 1.0 if name in HEAD_GROUPS else 0.0)
            for name, dims in group_shapes(self.predictor_cfg).items()
        ]
        return np.concatenate(pieces)

    def shard_batch(self, state: SiloState) -> SampleBatch:
        """All of a silo's samples stacked once."""
        stacked = self._stacked.get(state.silo_id)
        if stacked is None:
            stacked = SampleBatch.stack(state.shard.samples)
            self._stacked[state.silo_id] = stacked
        return stacked

    def draw_batch(self, state: SiloState, round_index: int) -> SampleBatch:
        """b samples without replacement from the silo's round stream."""
        stacked = self.shard_batch(state)
        size = min(self.train_cfg.b, stacked.size)
        return stacked.take(state.batch_rng(round_index).choice(stacked.size, size=size, replace=False))

    def gradient(self, theta: np.ndarray, batch: SampleBatch) -> tuple[float, np.ndarray]:
        """Batch loss and flat gradient, masked when only the head trains."""
        loss, grads = loss_gradient(from_vector(self.predictor_cfg, theta), self.predictor_cfg, batch)
        flat = grads.to_vector()
        if self._mask is not None:
            flat = flat * self._mask
        return loss, flat

    def step(self, state: SiloState, round_index: int) -> SiloState:
        """One clipped local update.

        Raises:
            DivergenceError: If the loss or gradient is not finite
        """
        loss, grad = self.gradient(state.theta, self.draw_batch(state, round_index))
        if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
            logger.error("Silo %d diverged at round %d", state.silo_id, round_index)
            raise DivergenceError(
                f"Non-finite loss or gradient on silo {state.silo_id} at round {round_index}",
                {"silo_id": state.silo_id, "round": round_index, "loss": loss},
            )
        norm = float(np.linalg.norm(grad))
        if norm > self.train_cfg.clip_norm:
            logger.warning("Clipping gradient of silo %d at round %d (norm %.4g)", state.silo_id, round_index, norm)
            grad = grad * (self.train_cfg.clip_norm / norm)
        step_size = self.train_cfg.step_size(round_index)
        optimizer_state = state.optimizer_state
        if self.train_cfg.optimizer == OptimizerName.RMSPROP:
            if optimizer_state is None:
                optimizer_state = np.zeros_like(grad)
            optimizer_state = RMSPROP_DECAY * optimizer_state + (1.0 - RMSPROP_DECAY) * grad * grad
            update = grad / (np.sqrt(optimizer_state) + RMSPROP_EPS)
        else:
            update = grad
        return state.evolve(
            theta=state.theta - step_size * update,
            optimizer_state=optimizer_state,
            gradient_steps=state.gradient_steps + 1,
        )

    def shard_loss(self, state: SiloState) -> float:
        """MSE of the silo's own model on its whole shard."""
        batch = self.shard_batch(state)
        params = from_vector(self.predictor_cfg, state.theta)
        return mse_loss(predict_batch(params, self.predictor_cfg, batch), batch.targets)


def _check_thetas(states: Sequence[SiloState]) -> None:
    lengths = {state.theta.shape for state in states}
    if len(lengths) != 1:
        raise ShapeError("Silo parameter vectors differ in length", {"lengths": sorted(lengths)})


def dpasgd_round(
    states: Sequence[SiloState],
    consensus: ConsensusMatrix,
    cfg: TrainConfig,
    round_index: int,
    trainer: LocalTrainer,
    executor: Executor | None = None,
) -> list[SiloState]:
    """One synchronous DPASGD round.

    On rounds with k = 0 (mod u+1) a silo with more than
    ``in_neighbor_threshold`` in-neighbors replaces its theta by the consensus
    mix of the pre-round snapshot; every other silo takes a gradient step.

    Args:
        states: Silo states in silo order
        consensus: Mixing weights and in-degrees
        cfg: Training configuration
        round_index: Round k
        trainer: Local step implementation
        executor: Optional pool for the gradient phase

    Returns:
        New states in silo order
    """
    _check_thetas(states)
    if consensus.n_silos != len(states):
        raise ShapeError(
            "Consensus matrix does not match the silo count",
            {"silos": len(states), "matrix": consensus.n_silos},
        )
    averaging_round = cfg.is_averaging_round(round_index)
    averages = [
        averaging_round and consensus.in_degrees[silo_index] > cfg.in_neighbor_threshold
        for silo_index in range(len(states))
    ]
    snapshot = [state.theta for state in states]
    stepped = iter(_map_silos(
        executor,
        lambda state: trainer.step(state, round_index),
        [state for state, averages_now in zip(states, averages) if not averages_now],
    ))
    updated = []
    for silo_index, state in enumerate(states):
        if averages[silo_index]:
            updated.append(state.evolve(
                theta=weighted_average(consensus.a[silo_index], snapshot),
                averaging_steps=state.averaging_steps + 1,
            ))
        else:
            updated.append(next(stepped))
    return updated


def fedavg_round(
    states: Sequence[SiloState],
    cfg: TrainConfig,
    round_index: int,
    trainer: LocalTrainer,
    executor: Executor | None = None,
) -> list[SiloState]:
    """One server-based round: broadcast the FedAvg model on averaging rounds, local steps otherwise."""
    _check_thetas(states)
    if cfg.is_averaging_round(round_index):
        global_theta = fedavg_aggregate(states)
        return [
            state.evolve(theta=global_theta.copy(), averaging_steps=state.averaging_steps + 1)
            for state in states
        ]
    return _map_silos(executor, lambda state: trainer.step(state, round_index), states)
