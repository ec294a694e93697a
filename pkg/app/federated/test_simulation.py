"""Tests for the lockstep simulation and metrics output."""

import tempfile
from pathlib import Path

import numpy as np

from app.common.enums import ConsensusWeights, LearningScenario, OptimizerName, ShardStrategy
from app.common.errors import ConfigError
from app.data.synthetic import generate, holdout_config, shard
from app.federated.dtos import TrainConfig
from app.federated.simulation import (
    constant_baseline,
    METRICS_COLUMNS,
    read_metrics,
    run_simulation,
    Simulation,
    write_metrics,
)
from app.federated.topology import complete_topology, load_topology
from tests.conftest import BaseTestCase
from tests.fixtures import TINY_DATA, TINY_MODEL, TINY_TRAIN


class TestSimulation(BaseTestCase):
    """Test cases for Simulation and run_simulation."""

    def setUp(self):
        """Set up tiny data split over three silos."""
        super().setUp()
        self.samples = generate(TINY_DATA)
        self.holdout = generate(holdout_config(TINY_DATA))
        self.topology = complete_topology(3)
        self.shards = shard(self.samples, 3, ShardStrategy.IID, TINY_DATA.seed)

    def _run(self, threads: int = 1, **overrides):
        cfg = TrainConfig.model_validate({**TINY_TRAIN.model_dump(), **overrides})
        return run_simulation(self.topology, cfg, TINY_MODEL, self.shards, self.holdout, threads=threads)

    def test_zero_rounds(self):
        """Test that rounds = 0 records only the initial evaluation."""
        history = self._run(rounds=0)
        self.assertEqual([row.round for row in history.rows], [0])

    def test_evaluation_rounds(self):
        """Test evaluations at 0, every eval_every rounds and the last round."""
        history = self._run(rounds=5, eval_every=2)
        self.assertEqual([row.round for row in history.rows], [0, 2, 4, 5])
        self.assertTrue(all(row.wall_ms == 0 for row in history.rows))
        self.assertEqual(len(history.last.silo_losses), 3)

    def test_deterministic(self):
        """Test that two runs produce identical histories."""
        first, second = self._run(), self._run()
        self.assertEqual(first.rows, second.rows)
        np.testing.assert_array_equal(first.global_theta, second.global_theta)

    def test_threads_do_not_change_results(self):
        """Test one against three worker threads."""
        serial, pooled = self._run(threads=1), self._run(threads=3)
        self.assertEqual(serial.rows, pooled.rows)

    def test_dfl_complete_uniform_equals_sfl(self):
        """Test that uniform averaging on a complete graph reproduces FedAvg exactly."""
        common = {"consensus": ConsensusWeights.UNIFORM, "rounds": 12, "u": 2}
        decentralized = self._run(mode=LearningScenario.DFL, **common)
        server = self._run(mode=LearningScenario.SFL, **common)
        self.assertEqual(decentralized.rows, server.rows)
        np.testing.assert_array_equal(decentralized.global_theta, server.global_theta)

    def test_centralized_single_silo(self):
        """Test that CLL trains one silo on every sample and lowers its loss."""
        history = self._run(
            mode=LearningScenario.CLL, rounds=200, eval_every=50, optimizer=OptimizerName.RMSPROP, alpha=0.005,
        )
        self.assertEqual(len(history.states), 1)
        self.assertEqual(history.states[0].shard.size, len(self.samples))
        self.assertLess(history.last.mean_silo_loss, history.rows[0].mean_silo_loss)

    def test_participation_mask(self):
        """Test that the global model ignores non-participating silos."""
        history = self._run(participation=(1, 0, 0), rounds=3)
        np.testing.assert_array_equal(history.global_theta, history.states[0].theta)

    def test_participation_from_text(self):
        """Test that comma-separated flags from a config file select the same silos."""
        from_text = self._run(participation="1,0,0", rounds=3)
        from_tuple = self._run(participation=(1, 0, 0), rounds=3)
        np.testing.assert_array_equal(from_text.global_theta, from_tuple.global_theta)

    def test_early_stopping(self):
        """Test that a run without improvement stops after `patience` evaluations."""
        history = self._run(alpha=0.0, rounds=20, eval_every=2, patience=2)
        self.assertTrue(history.stopped_early)
        self.assertEqual([row.round for row in history.rows], [0, 2, 4])

    def test_shard_count_mismatch(self):
        """Test that shards must match the topology."""
        with self.assertRaises(ConfigError):
            Simulation(load_topology("gaia"), TINY_TRAIN, TINY_MODEL, self.shards, self.holdout)

    def test_metrics_file(self):
        """Test the CSV header and that values read back exactly."""
        history = self._run(rounds=4)
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "metrics.csv"
            write_metrics(path, history)
            header = path.read_text(encoding="utf-8").splitlines()[0]
            rows = read_metrics(path)
        self.assertEqual(header, ",".join(METRICS_COLUMNS))
        self.assertEqual(rows[-1]["global_rmse"], history.last.global_rmse)
        self.assertEqual(rows[-1]["round"], 4.0)

    def test_constant_baseline(self):
        """Test the mean-predictor baseline on a known target."""
        baseline = constant_baseline(self.shards, self.holdout)
        mean = np.mean([sample.target_angle for sample in self.samples])
        expected = np.sqrt(np.mean([(sample.target_angle - mean) ** 2 for sample in self.holdout]))
        self.assertAlmostEqual(baseline.rmse, float(expected), places=12)
