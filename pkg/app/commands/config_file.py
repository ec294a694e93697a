"""Run configuration files and run manifests.

Config files are INI text with the sections ``[model]``, ``[train]``,
``[data]``, ``[run]`` and, for parameter accounting, ``[lttd]``. Every section
maps onto a pydantic model that rejects unknown keys.
"""

import configparser
from datetime import datetime, timezone
import json
import logging
from pathlib import Path
import subprocess  # noqa: S404

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app import __version__
from app.common.errors import ConfigError
from app.data.dtos import SyntheticConfig
from app.federated.dtos import TrainConfig
from app.lttd.dtos import LttdConfig
from app.model.dtos import PredictorConfig

logger = logging.getLogger(__name__)

SECTIONS = ("lttd", "model", "train", "data", "run")
MANIFEST_SUFFIX = ".json"


class RunConfig(BaseModel):
    """Everything a run needs besides the output directory."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    model: PredictorConfig = Field(default_factory=PredictorConfig, description="Predictor configuration")
    train: TrainConfig = Field(default_factory=TrainConfig, description="Training schedule and scenario")
    data: SyntheticConfig = Field(default_factory=SyntheticConfig, description="Synthetic data configuration")
    topology: str = Field("gaia", description="Bundled topology name or topology file path")
    lttd: LttdConfig | None = Field(None, description="Standalone block configuration for parameter accounting")

    def with_seed(self, seed: int | None) -> "RunConfig":
        """Override the training and data seeds."""
        if seed is None:
            return self
        return self.model_copy(update={
            "train": self.train.model_copy(update={"seed": seed}),
            "data": self.data.model_copy(update={"seed": seed}),
        })

    def block_config(self) -> LttdConfig:
        """The [lttd] section, or the block implied by [model]."""
        return self.lttd if self.lttd is not None else self.model.lttd_config()


class RunManifest(BaseModel):
    """Resolved configuration plus provenance of a training run."""

    config: RunConfig = Field(..., description="Resolved configuration")
    seed: int = Field(..., description="Run seed")
    topology_name: str = Field(..., description="Name of the topology used")
    version: str = Field(..., description="git-describe style version string")
    started_at: str = Field(..., description="UTC start timestamp, ISO 8601")

    def to_config_text(self) -> str:
        """Config-file form of the resolved configuration."""
        return to_config_text(self.config)


def _ini_value(config_value: object) -> str:
    if isinstance(config_value, bool):
        return "true" if config_value else "false"
    if isinstance(config_value, (list, tuple)):
        return ",".join(_ini_value(item) for item in config_value)
    if isinstance(config_value, float):
        return repr(config_value)
    return str(config_value)


def to_config_text(config: RunConfig) -> str:
    """Serialize a RunConfig as INI text that parse_config_text reads back unchanged."""
    sections: dict[str, dict[str, object]] = {
        "model": config.model.model_dump(mode="json"),
        "train": config.train.model_dump(mode="json"),
        "data": config.data.model_dump(mode="json"),
        "run": {"topology": config.topology},
    }
    if config.lttd is not None:
        sections = {"lttd": config.lttd.model_dump(mode="json"), **sections}
    lines: list[str] = []
    for section, entries in sections.items():
        lines.append(f"[{section}]")
        lines.extend(
            f"{key} = {_ini_value(entry)}" for key, entry in entries.items() if entry is not None
        )
        lines.append("")
    return "\n".join(lines)


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse INI text into a RunConfig.

    Raises:
        ConfigError: On syntax errors, unknown sections or keys, or invalid values
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment]
    try:
        parser.read_string(text, source=source)
    except configparser.Error as parse_error:
        raise ConfigError(f"Cannot parse {source}: {parse_error}", {"source": source}) from parse_error
    unknown = [section for section in parser.sections() if section not in SECTIONS]
    if unknown:
        raise ConfigError(f"Unknown config sections: {', '.join(unknown)}", {"sections": unknown})
    payload: dict[str, object] = {
        section: dict(parser.items(section))
        for section in ("lttd", "model", "train", "data")
        if parser.has_section(section)
    }
    if parser.has_section("run"):
        run_section = dict(parser.items("run"))
        topology = run_section.pop("topology", None)
        if run_section:
            raise ConfigError(f"Unknown [run] keys: {', '.join(sorted(run_section))}", {"keys": sorted(run_section)})
        if topology is not None:
            payload["topology"] = topology
    return _validate(payload, source)


def _validate(payload: dict, source: str) -> RunConfig:
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as validation_error:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in problem['loc'])}: {problem['msg']}"
            for problem in validation_error.errors()
        )
        raise ConfigError(f"Invalid configuration in {source}: {problems}", {"source": source}) from validation_error


def load_run_config(path: Path | str) -> RunConfig:
    """Read a config file or a manifest.json.

    Raises:
        ConfigError: If the file is unreadable or invalid
    """
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as read_error:
        raise ConfigError(
            f"Cannot read {config_path}: {read_error.strerror}", {"path": str(config_path)},
        ) from read_error
    if config_path.suffix == MANIFEST_SUFFIX:
        try:
            return RunManifest.model_validate_json(text).config
        except ValidationError as validation_error:
            raise ConfigError(f"Invalid manifest {config_path}", {"path": str(config_path)}) from validation_error
    return parse_config_text(text, source=str(config_path))


def version_string() -> str:
    """``git describe`` output, or the package version outside a checkout."""
    try:
        described = subprocess.run(  # noqa: S603, S607
            ["git", "describe", "--tags", "--always", "--dirty"],
            capture_output=True,
            text=True,
            check=True,
            cwd=Path(__file__).parent,
        )
    except (OSError, subprocess.CalledProcessError):
        return f"v{__version__}"
    return described.stdout.strip() or f"v{__version__}"


def build_manifest(config: RunConfig, topology_name: str) -> RunManifest:
    """Manifest for a run starting now."""
    return RunManifest(
        config=config,
        seed=config.train.seed,
        topology_name=topology_name,
        version=version_string(),
        started_at=datetime.now(timezone.utc).isoformat(),
    )


def write_manifest(path: Path, manifest: RunManifest) -> None:
    """Write manifest.json."""
    document = json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True)
    Path(path).write_text(document + "\n", encoding="utf-8")
    logger.info("Wrote manifest to %s", path)
