"""train: run a simulation and write metrics, manifest and final parameters."""

import logging
from pathlib import Path
import sys
from typing import TextIO

from app.commands.config_file import build_manifest, load_run_config, RunConfig, write_manifest
from app.common.enums import LearningScenario
from app.common.errors import ConfigError
from app.common.settings import resolve_threads
from app.data.storage import dump_samples
from app.data.synthetic import generate, holdout_config, shard
from app.federated.simulation import constant_baseline, run_simulation, write_metrics
from app.federated.topology import load_topology
from app.model.predictor import from_vector
from app.model.serialization import save_params

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
MANIFEST_FILE = "manifest.json"
PARAMS_FILE = "params.bin"
SAMPLES_FILE = "samples.csv"


def parameter_metadata(config: RunConfig) -> dict:
    """Metadata block stored with the final parameters."""
    return {
        "predictor": config.model.model_dump(mode="json"),
        "data": config.data.model_dump(mode="json"),
        "seed": config.train.seed,
        "mode": config.train.mode.value,
    }


def cmd_train(
    config_path: Path,
    out_dir: Path,
    seed: int | None = None,
    threads: int | None = None,
    dump_data: bool = False,
    out: TextIO = sys.stdout,
) -> int:
    """Train per the config and write metrics.csv, manifest.json and params.bin.

    Args:
        config_path: Config file or manifest.json
        out_dir: Output directory, created if missing
        seed: Overrides the training and data seeds
        threads: Worker threads; LTTD_THREADS takes precedence
        dump_data: Also write the sharded training samples to samples.csv
        out: Report stream

    Returns:
        0 on success

    Raises:
        ConfigError: If the output directory cannot be created
    """
    config = load_run_config(config_path).with_seed(seed)
    workers = resolve_threads(threads)
    topology = load_topology(config.topology)
    n_silos = 1 if config.train.mode == LearningScenario.CLL else topology.n_silos
    samples = generate(config.data)
    shards = shard(samples, n_silos, config.data.strategy, config.data.seed)
    holdout = generate(holdout_config(config.data))
    logger.info(
        "Training %s on %s: %d samples over %d silos, %d threads",
        config.train.mode.value, topology.name, len(samples), n_silos, workers,
    )

    output = Path(out_dir)
    try:
        output.mkdir(parents=True, exist_ok=True)
    except OSError as mkdir_error:
        raise ConfigError(f"Cannot create {output}: {mkdir_error.strerror}", {"path": str(output)}) from mkdir_error
    manifest = build_manifest(config, topology.name)
    history = run_simulation(topology, config.train, config.model, shards, holdout, threads=workers)

    write_metrics(output / METRICS_FILE, history)
    write_manifest(output / MANIFEST_FILE, manifest)
    save_params(output / PARAMS_FILE, from_vector(config.model, history.global_theta), parameter_metadata(config))
    if dump_data:
        dump_samples(output / SAMPLES_FILE, shards)

    baseline = constant_baseline(shards, holdout)
    final = history.last
    out.write(f"mode: {config.train.mode.value}\n")
    out.write(f"topology: {topology.name} ({topology.n_silos} silos)\n")
    out.write(f"rounds completed: {final.round}{' (stopped early)' if history.stopped_early else ''}\n")
    out.write(f"final global_rmse: {final.global_rmse!r}\n")
    out.write(f"final global_mae: {final.global_mae!r}\n")
    out.write(f"constant-mean baseline rmse: {baseline.rmse!r}\n")
    out.write(f"wrote {METRICS_FILE}, {MANIFEST_FILE}, {PARAMS_FILE} to {output}\n")
    return 0
