"""Equivalence, gradient and consensus checks at verification scale.

Every check draws its random instances from labelled streams of a fixed seed,
so the report is identical on every run.
"""

from dataclasses import dataclass
import logging
from typing import Callable

import numpy as np
from pydantic import BaseModel, Field

from app.common.enums import ConsensusWeights, LearningScenario, ShardStrategy
from app.common.rng import stream
from app.data.dtos import SyntheticConfig
from app.data.synthetic import generate, shard
from app.federated.dtos import SiloState, TrainConfig
from app.federated.simulation import Simulation
from app.federated.topology import (
    bundled_topologies,
    complete_topology,
    ConsensusMatrix,
    load_topology,
    metropolis_weights,
    Topology,
    uniform_weights,
)
from app.federated.training import dpasgd_round, LocalTrainer, weighted_average
from app.lttd.accounting import param_count
from app.lttd.bilinear import bilinear_attention_map, bilinear_joint_matrix, bilinear_joint_sum, init_bilinear_params
from app.lttd.block import attention_map, joint_representation, ModalityTriple
from app.lttd.dtos import LttdConfig
from app.lttd.oracles import (
    attention_from_tensor_oracle,
    joint_from_attention_oracle,
    reconstruct_attention_tensor,
    superdiagonal,
)
from app.lttd.params import init_params
from app.model.dtos import PredictorConfig, SampleBatch
from app.model.metrics import mse_loss
from app.model.predictor import from_vector, group_shapes, init_predictor_params, loss_gradient, predict_batch
from app.tensor.core import max_relative_error

logger = logging.getLogger(__name__)

VERIFY_SEED = 20240917
FAULT = 1e-6
FD_STEP = 1e-6
FD_FLOOR = 1e-4
CONTRACTION_ROUNDS = 500
GUARD_ROUNDS = 100
EQUIVALENCE_ROUNDS = 50
ROUNDOFF = 1e-12

TOY_COUNT = LttdConfig(n1=1, n2=1, n3=1, d1=2, d2=2, d3=2, r_slices=1, d_z=2)
LARGE_COUNT = LttdConfig(n1=6, n2=6, n3=6, d1=64, d2=64, d3=64, r_slices=32, d_z=1024)
GRADIENT_MODEL = PredictorConfig(d_img=3, d1=2, d2=2, d3=2, n3=2, r_slices=2, d_z=3)
SIM_MODEL = PredictorConfig(d_img=4, d1=2, d2=2, d3=2, n3=2, r_slices=1, d_z=2)
SIM_DATA = SyntheticConfig(n_sequences=4, seq_len=12, d_img=4, holdout_sequences=1, seed=VERIFY_SEED)


class CheckResult(BaseModel):
    """Outcome of one check."""

    name: str = Field(..., description="Check identifier")
    max_error: float = Field(..., description="Largest observed error")
    tolerance: float = Field(..., description="Largest admissible error")
    instances: int = Field(..., description="Random instances or rounds examined")

    @property
    def passed(self) -> bool:
        """Whether the error is within tolerance."""
        return self.max_error <= self.tolerance

    def report_line(self) -> str:
        """One deterministic report line."""
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: max error {self.max_error:.3e} "
            f"(tolerance {self.tolerance:.0e}, {self.instances} instances)"
        )


@dataclass(frozen=True)
class _Check:
    name: str
    tolerance: float
    instances: int
    run: Callable[[int, bool], float]


def _random_instance(rng: np.random.Generator) -> tuple[LttdConfig, ModalityTriple]:
    dims = tuple(int(rng.choice([2, 4, 8])) for _ in range(3))
    r_slices = int(rng.choice([r for r in (1, 2, 4) if all(dim % r == 0 for dim in dims)]))
    counts = tuple(int(rng.integers(1, 4)) for _ in range(3))
    cfg = LttdConfig(
        n1=counts[0], n2=counts[1], n3=counts[2],
        d1=dims[0], d2=dims[1], d3=dims[2],
        r_slices=r_slices, d_z=int(rng.integers(1, 9)),
    )
    inputs = ModalityTriple(*(rng.normal(size=(count, dim)) for count, dim in zip(counts, dims)))
    return cfg, inputs


def check_factorization(instances: int, inject_fault: bool) -> float:
    """Decomposed attention map against the explicitly rebuilt attention tensor."""
    worst = 0.0
    for index in range(instances):
        cfg, inputs = _random_instance(stream(VERIFY_SEED, "factorization", index))
        params = init_params(cfg, VERIFY_SEED + index)
        decomposed = attention_map(params, inputs, cfg).m
        if inject_fault:
            decomposed = decomposed + FAULT
        expected = attention_from_tensor_oracle(reconstruct_attention_tensor(params), inputs).m
        worst = max(worst, max_relative_error(decomposed, expected))
    return worst


def check_hadamard(instances: int, inject_fault: bool) -> float:
    """Hadamard joint representation against the explicit superdiagonal core."""
    worst = 0.0
    for index in range(instances):
        cfg, inputs = _random_instance(stream(VERIFY_SEED, "hadamard", index))
        params = init_params(cfg, VERIFY_SEED + index)
        attention = attention_map(params, inputs, cfg)
        fast = joint_representation(params, attention, inputs).z
        expected = joint_from_attention_oracle(params, superdiagonal(cfg.d_z), attention, inputs).z
        worst = max(worst, max_relative_error(fast, expected))
    return worst


def check_bilinear(instances: int, inject_fault: bool) -> float:
    """Double-sum and matrix forms of the bilinear joint representation."""
    worst = 0.0
    for index in range(instances):
        rng = stream(VERIFY_SEED, "bilinear", index)
        d1, d2 = (int(rng.choice([2, 4, 8])) for _ in range(2))
        r_slices = int(rng.choice([r for r in (1, 2) if d1 % r == 0 and d2 % r == 0]))
        params = init_bilinear_params(d1, d2, r_slices, int(rng.integers(1, 9)), VERIFY_SEED + index)
        m1 = rng.normal(size=(int(rng.integers(1, 5)), d1))
        m2 = rng.normal(size=(int(rng.integers(1, 5)), d2))
        attention = bilinear_attention_map(params, m1, m2)
        worst = max(worst, max_relative_error(
            bilinear_joint_matrix(params, attention, m1, m2).z,
            bilinear_joint_sum(params, attention, m1, m2).z,
        ))
    return worst


def _gradient_batch(rng: np.random.Generator, size: int) -> SampleBatch:
    d_img = GRADIENT_MODEL.d_img
    return SampleBatch(
        current_image=rng.normal(size=(size, d_img)),
        past_frames=rng.normal(size=(size, 5, d_img)),
        past_steering=rng.uniform(-1, 1, size=(size, 5)),
        targets=rng.uniform(-1, 1, size=size),
    )


def check_gradient(instances: int, inject_fault: bool) -> float:
    """Reverse-mode gradient against central finite differences, spread over every group."""
    rng = stream(VERIFY_SEED, "gradient")
    batch = _gradient_batch(rng, 3)
    theta = init_predictor_params(GRADIENT_MODEL, VERIFY_SEED).to_vector()
    theta = theta + rng.normal(0, 0.1, size=theta.shape)
    gradient = loss_gradient(from_vector(GRADIENT_MODEL, theta), GRADIENT_MODEL, batch)[1].to_vector()

    def loss_at(vector: np.ndarray) -> float:
        params = from_vector(GRADIENT_MODEL, vector)
        return mse_loss(predict_batch(params, GRADIENT_MODEL, batch), batch.targets)

    offsets, widths = [], []
    offset = 0
    for dims in group_shapes(GRADIENT_MODEL).values():
        offsets.append(offset)
        widths.append(int(np.prod(dims)))
        offset += widths[-1]
    worst = 0.0
    for index in range(instances):
        group = index % len(offsets)
        coordinate = offsets[group] + int(rng.integers(widths[group]))
        step = np.zeros_like(theta)
        step[coordinate] = FD_STEP
        numeric = (loss_at(theta + step) - loss_at(theta - step)) / (2 * FD_STEP)
        analytic = gradient[coordinate]
        scale = max(abs(numeric), abs(analytic), FD_FLOOR)
        worst = max(worst, abs(analytic - numeric) / scale)
    return worst


def check_param_count(instances: int, inject_fault: bool) -> float:
    """Exact toy counts and a large-scale rate above one thousand."""
    toy = param_count(TOY_COUNT)
    large = param_count(LARGE_COUNT)
    mismatches = int(toy.full_tensor_params != 16) + int(toy.decomposed_params != 32)
    return float(mismatches + int(large.decomposition_rate <= 1000))


def _bundled() -> list[Topology]:
    return [load_topology(path) for path in bundled_topologies()]


def check_double_stochastic(instances: int, inject_fault: bool) -> float:
    """Row and column sums of Metropolis matrices on bundled topologies."""
    worst = 0.0
    for topology in _bundled():
        consensus = metropolis_weights(topology)
        worst = max(worst, consensus.row_residual(), consensus.column_residual())
    return worst


def mix(consensus: ConsensusMatrix, thetas: list[np.ndarray]) -> list[np.ndarray]:
    """One averaging step on every silo from a common snapshot."""
    return [weighted_average(consensus.a[silo_index], thetas) for silo_index in range(consensus.n_silos)]


def check_mean_preservation(instances: int, inject_fault: bool) -> float:
    """Silo-mean parameters are unchanged by a doubly stochastic averaging step."""
    worst = 0.0
    for topology in _bundled():
        rng = stream(VERIFY_SEED, "mean", topology.name)
        thetas = [rng.normal(size=8) for _ in range(topology.n_silos)]
        mixed = mix(metropolis_weights(topology), thetas)
        worst = max(worst, max_relative_error(np.mean(mixed, axis=0), np.mean(thetas, axis=0)))
    return worst


def _spread(thetas: list[np.ndarray]) -> float:
    center = np.mean(thetas, axis=0)
    return max(float(np.linalg.norm(theta - center)) for theta in thetas)


def check_contraction(instances: int, inject_fault: bool) -> float:
    """Spread after repeated averaging, relative to the initial spread.

    Returns 1 when the spread ever grows by more than round-off, which is
    measured against the initial spread once the silos have agreed.
    """
    worst = 0.0
    for topology in _bundled():
        consensus = metropolis_weights(topology)
        rng = stream(VERIFY_SEED, "contraction", topology.name)
        thetas = [rng.normal(size=4) for _ in range(topology.n_silos)]
        initial = previous = _spread(thetas)
        for _ in range(instances):
            thetas = mix(consensus, thetas)
            current = _spread(thetas)
            if current > previous * (1 + ROUNDOFF) + ROUNDOFF * initial:
                return 1.0
            previous = current
        worst = max(worst, previous / initial)
    return worst


def _sim_data():
    samples = generate(SIM_DATA)
    holdout = samples[:4]
    return samples, holdout


def check_dfl_sfl_equivalence(instances: int, inject_fault: bool) -> float:
    """Complete-graph uniform DPASGD against server FedAvg: number of differing parameters."""
    samples, holdout = _sim_data()
    topology = complete_topology(4)
    shards = shard(samples, topology.n_silos, ShardStrategy.IID, VERIFY_SEED)
    base = TrainConfig(
        u=2, b=4, alpha=0.05, rounds=instances, seed=VERIFY_SEED,
        consensus=ConsensusWeights.UNIFORM, eval_every=10,
    )
    runs = []
    for mode in (LearningScenario.DFL, LearningScenario.SFL):
        cfg = base.model_copy(update={"mode": mode})
        runs.append(Simulation(topology, cfg, SIM_MODEL, shards, holdout).run())
    decentralized, server = runs
    differing = sum(
        int(np.count_nonzero(left.theta != right.theta))
        for left, right in zip(decentralized.states, server.states)
    )
    differing += sum(int(left != right) for left, right in zip(decentralized.rows, server.rows))
    return float(differing)


def check_guard(instances: int, inject_fault: bool) -> float:
    """Averaging steps taken by a silo with exactly one in-neighbor."""
    samples, _ = _sim_data()
    edges = {(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1), (0, 3)}
    topology = Topology(n_silos=4, edges=frozenset(edges), name="one-in-neighbor", strict=True)
    consensus = uniform_weights(topology)
    cfg = TrainConfig(u=1, b=4, alpha=0.01, rounds=instances, seed=VERIFY_SEED)
    trainer = LocalTrainer(SIM_MODEL, cfg)
    theta = init_predictor_params(SIM_MODEL, VERIFY_SEED).to_vector()
    states = [
        SiloState(silo_id=silo_shard.silo_id, theta=theta.copy(), shard=silo_shard, seed=VERIFY_SEED)
        for silo_shard in shard(samples, topology.n_silos, ShardStrategy.IID, VERIFY_SEED)
    ]
    for round_index in range(1, instances + 1):
        states = dpasgd_round(states, consensus, cfg, round_index, trainer)
    if states[0].averaging_steps == 0:
        return 1.0
    return float(states[3].averaging_steps)


CHECKS = (
    _Check("factorization_equivalence", 1e-10, 200, check_factorization),
    _Check("hadamard_elimination", 1e-10, 100, check_hadamard),
    _Check("bilinear_identity", 1e-12, 100, check_bilinear),
    _Check("gradient_finite_differences", 1e-5, 50, check_gradient),
    _Check("parameter_accounting", 0.0, 2, check_param_count),
    _Check("metropolis_double_stochastic", 1e-12, 3, check_double_stochastic),
    _Check("consensus_mean_preservation", 1e-12, 3, check_mean_preservation),
    _Check("consensus_contraction", 1e-6, CONTRACTION_ROUNDS, check_contraction),
    _Check("dfl_sfl_equivalence", 0.0, EQUIVALENCE_ROUNDS, check_dfl_sfl_equivalence),
    _Check("averaging_guard", 0.0, GUARD_ROUNDS, check_guard),
)


def run_checks(inject_fault: bool = False) -> list[CheckResult]:
    """Run every check in a fixed order.

    Args:
        inject_fault: Perturb the decomposed attention so the suite must fail

    Returns:
        One result per check
    """
    results = []
    for check in CHECKS:
        max_error = check.run(check.instances, inject_fault)
        result = CheckResult(name=check.name, max_error=max_error, tolerance=check.tolerance, instances=check.instances)
        logger.info(result.report_line())
        results.append(result)
    return results
