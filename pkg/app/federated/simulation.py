"""Lockstep simulation of CLL, SFL and DFL runs."""

from concurrent.futures import Executor, ThreadPoolExecutor
import csv
import logging
from pathlib import Path
import time
from typing import Sequence

import numpy as np

from app.common.enums import LearningScenario
from app.common.errors import ConfigError
from app.data.dtos import Shard
from app.federated.dtos import MetricsHistory, MetricsRow, SiloState, TrainConfig
from app.federated.topology import consensus_matrix, Topology
from app.federated.training import dpasgd_round, fedavg_aggregate, fedavg_round, LocalTrainer
from app.model.dtos import PredictorConfig, RegressionMetrics, SampleBatch, SteeringSample
from app.model.metrics import metrics
from app.model.predictor import from_vector, init_predictor_params, predict_batch

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("round", "global_rmse", "global_mae", "mean_silo_loss", "wall_ms")


def centralized_shards(shards: Sequence[Shard]) -> list[Shard]:
    """All samples in a single silo, in shard order."""
    samples = tuple(sample for silo_shard in shards for sample in silo_shard.samples)
    return [Shard(silo_id=0, samples=samples)]


def constant_baseline(shards: Sequence[Shard], holdout: Sequence[SteeringSample]) -> RegressionMetrics:
    """Metrics of always predicting the mean training angle."""
    targets = [sample.target_angle for silo_shard in shards for sample in silo_shard.samples]
    expected = np.array([sample.target_angle for sample in holdout])
    return metrics(np.full(expected.shape, float(np.mean(targets))), expected)


def evaluate_theta(theta: np.ndarray, predictor_cfg: PredictorConfig, holdout: SampleBatch) -> RegressionMetrics:
    """Held-out RMSE and MAE of a flat parameter vector."""
    params = from_vector(predictor_cfg, theta)
    return metrics(predict_batch(params, predictor_cfg, holdout), holdout.targets)


class Simulation:
    """One configured run over a topology."""

    def __init__(
        self,
        topology: Topology,
        train_cfg: TrainConfig,
        predictor_cfg: PredictorConfig,
        shards: Sequence[Shard],
        holdout: Sequence[SteeringSample],
    ) -> None:
        """Initialize the run.

        Args:
            topology: Silo graph; ignored for CLL
            train_cfg: Schedule and scenario
            predictor_cfg: Model shared by every silo
            shards: One shard per silo
            holdout: Held-out samples for the global model

        Raises:
            ConfigError: If the shard count does not match the topology
        """
        self.train_cfg = train_cfg
        self.predictor_cfg = predictor_cfg
        if train_cfg.mode == LearningScenario.CLL:
            shards = centralized_shards(shards)
            topology = Topology(n_silos=1, edges=frozenset(), name="centralized")
        if len(shards) != topology.n_silos:
            raise ConfigError(
                f"{len(shards)} shards for {topology.n_silos} silos",
                {"shards": len(shards), "silos": topology.n_silos},
            )
        self.topology = topology
        self.consensus = None
        if train_cfg.mode == LearningScenario.DFL:
            self.consensus = consensus_matrix(topology, train_cfg.consensus)
        self.trainer = LocalTrainer(predictor_cfg, train_cfg)
        self.holdout = SampleBatch.stack(list(holdout))
        theta = init_predictor_params(predictor_cfg, train_cfg.seed).to_vector()
        lambdas = train_cfg.lambdas(topology.n_silos)
        self.states = [
            SiloState(
                silo_id=silo_shard.silo_id, theta=theta.copy(), shard=silo_shard,
                seed=train_cfg.seed, participation=flag,
            )
            for silo_shard, flag in zip(shards, lambdas)
        ]

    def advance(self, round_index: int, executor: Executor | None = None) -> None:
        """Run round k on every silo."""
        if self.consensus is None:
            if self.train_cfg.mode == LearningScenario.SFL:
                self.states = fedavg_round(self.states, self.train_cfg, round_index, self.trainer, executor)
                return
            self.states = [self.trainer.step(state, round_index) for state in self.states]
            return
        self.states = dpasgd_round(self.states, self.consensus, self.train_cfg, round_index, self.trainer, executor)

    def evaluate(self, round_index: int, wall_ms: int, executor: Executor | None = None) -> MetricsRow:
        """Evaluate the FedAvg model and every silo's training loss."""
        global_metrics = evaluate_theta(fedavg_aggregate(self.states), self.predictor_cfg, self.holdout)
        if executor is None:
            silo_losses = [self.trainer.shard_loss(state) for state in self.states]
        else:
            silo_losses = list(executor.map(self.trainer.shard_loss, self.states))
        row = MetricsRow(
            round=round_index,
            global_rmse=global_metrics.rmse,
            global_mae=global_metrics.mae,
            mean_silo_loss=float(np.mean(silo_losses)),
            wall_ms=wall_ms,
            silo_losses=tuple(silo_losses),
        )
        logger.info(
            "round %d: global rmse %.6f mae %.6f, mean silo loss %.6f",
            row.round, row.global_rmse, row.global_mae, row.mean_silo_loss,
        )
        return row

    def run(self, threads: int = 1) -> MetricsHistory:
        """Run every round, evaluating at round 0, every eval_every rounds and at the end."""
        history = MetricsHistory()
        started = time.perf_counter()
        best_rmse = np.inf
        stale = 0
        executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        try:
            history.rows.append(self.evaluate(0, self._wall_ms(started), executor))
            best_rmse = history.last.global_rmse
            for round_index in range(1, self.train_cfg.rounds + 1):
                self.advance(round_index, executor)
                if round_index % self.train_cfg.eval_every and round_index != self.train_cfg.rounds:
                    continue
                history.rows.append(self.evaluate(round_index, self._wall_ms(started), executor))
                if history.last.global_rmse < best_rmse:
                    best_rmse = history.last.global_rmse
                    stale = 0
                else:
                    stale += 1
                if self.train_cfg.patience and stale >= self.train_cfg.patience:
                    logger.info("Stopping early at round %d", round_index)
                    history.stopped_early = True
                    break
        finally:
            if executor is not None:
                executor.shutdown()
        history.global_theta = fedavg_aggregate(self.states)
        history.states = list(self.states)
        return history

    def _wall_ms(self, started: float) -> int:
        if not self.train_cfg.record_wall_time:
            return 0
        return int((time.perf_counter() - started) * 1000)


def run_simulation(
    topology: Topology,
    train_cfg: TrainConfig,
    predictor_cfg: PredictorConfig,
    shards: Sequence[Shard],
    holdout: Sequence[SteeringSample],
    threads: int = 1,
) -> MetricsHistory:
    """Run a full simulation and return its evaluation history.

    Args:
        topology: Silo graph (DFL); its silo count also sizes SFL runs
        train_cfg: Schedule and scenario
        predictor_cfg: Model configuration
        shards: One shard per silo
        holdout: Held-out samples
        threads: Worker threads for the per-silo phases

    Returns:
        MetricsHistory with the final global theta
    """
    return Simulation(topology, train_cfg, predictor_cfg, shards, holdout).run(threads)


def format_float(value: float) -> str:
    """Shortest round-trip text of a float."""
    return repr(float(value))


def write_metrics(path: Path, history: MetricsHistory) -> None:
    """Write metrics.csv with one line per evaluation."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for row in history.rows:
            writer.writerow([
                row.round,
                format_float(row.global_rmse),
                format_float(row.global_mae),
                format_float(row.mean_silo_loss),
                row.wall_ms,
            ])


def read_metrics(path: Path) -> list[dict[str, float]]:
    """Read metrics.csv back as numeric rows."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return [
            {column: float(cell_value) for column, cell_value in row.items()}
            for row in csv.DictReader(handle)
        ]
