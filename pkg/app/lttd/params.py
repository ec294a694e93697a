"""Learnable parameters of the decomposed block and their initialization."""

from dataclasses import dataclass, fields
import math

import numpy as np

from app.common.errors import ShapeError
from app.common.rng import stream
from app.lttd.dtos import LttdConfig

GROUP_NAMES = ("w1", "w2", "w3", "cores", "wz1", "wz2", "wz3")


@dataclass(frozen=True)
class LttdParams:
    """Factor matrices, Tucker cores and projections replacing the full tensor.

    The R slices are stacked on the leading axis:
    w_l has shape (R, d_l, d_l/R), cores (R, d1/R, d2/R, d3/R) and
    wz_l has shape (d_l, d_z).
    """

    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    cores: np.ndarray
    wz1: np.ndarray
    wz2: np.ndarray
    wz3: np.ndarray

    def __post_init__(self) -> None:
        """Validate the stacked shapes against each other."""
        for group in fields(self):
            object.__setattr__(self, group.name, np.asarray(getattr(self, group.name), dtype=np.float64))
        r_slices = self.cores.shape[0]
        expected = {
            "w1": (r_slices, self.wz1.shape[0], self.cores.shape[1]),
            "w2": (r_slices, self.wz2.shape[0], self.cores.shape[2]),
            "w3": (r_slices, self.wz3.shape[0], self.cores.shape[3]),
        }
        for name, dims in expected.items():
            if getattr(self, name).shape != dims:
                raise ShapeError(
                    f"{name} has shape {getattr(self, name).shape}, expected {dims}",
                    {"group": name},
                )
        if not self.wz1.shape[1] == self.wz2.shape[1] == self.wz3.shape[1]:
            raise ShapeError("Projections disagree on d_z", {"group": "wz"})

    @property
    def r_slices(self) -> int:
        """Number of slices R."""
        return self.cores.shape[0]

    @property
    def d_z(self) -> int:
        """Joint representation dimension."""
        return self.wz1.shape[1]

    @property
    def dims(self) -> tuple[int, int, int]:
        """Channel dimensions (d1, d2, d3)."""
        return (self.wz1.shape[0], self.wz2.shape[0], self.wz3.shape[0])

    def factor(self, modality: int, r_index: int) -> np.ndarray:
        """Return W_{l_r} for modality l in {1, 2, 3} and slice r."""
        return (self.w1, self.w2, self.w3)[modality - 1][r_index]

    def projection(self, modality: int) -> np.ndarray:
        """Return W_{z_l} for modality l in {1, 2, 3}."""
        return (self.wz1, self.wz2, self.wz3)[modality - 1]

    def to_groups(self) -> dict[str, np.ndarray]:
        """Named groups in the fixed order used by serialization."""
        return {name: getattr(self, name) for name in GROUP_NAMES}

    @classmethod
    def from_groups(cls, groups: dict[str, np.ndarray]) -> "LttdParams":
        """Build params from named groups."""
        return cls(**{name: groups[name] for name in GROUP_NAMES})

    def map_groups(self, transform) -> "LttdParams":
        """Apply a function to every group and rebuild the params."""
        return LttdParams.from_groups({name: transform(array) for name, array in self.to_groups().items()})

    def check_config(self, cfg: LttdConfig) -> None:
        """Raise ShapeError if the params do not match a config."""
        if self.dims != cfg.dims or self.r_slices != cfg.r_slices or self.d_z != cfg.d_z:
            raise ShapeError(
                "Parameters do not match the block configuration",
                {"dims": self.dims, "r_slices": self.r_slices, "d_z": self.d_z},
            )


def fan_bound(fan_in: int, fan_out: int) -> float:
    """Half-width of the fan-based uniform initialization."""
    return math.sqrt(6.0 / (fan_in + fan_out))


def uniform_block(seed: int, dims: tuple[int, ...], bound: float, *labels: object) -> np.ndarray:
    """Draw a block i.i.d. uniform on [-bound, bound] from a labelled stream."""
    return stream(seed, *labels).uniform(-bound, bound, size=dims)


def init_params(cfg: LttdConfig, seed: int, prefix: str = "lttd") -> LttdParams:
    """Fan-based uniform initialization keyed by (seed, parameter name, index).

    Args:
        cfg: Block configuration
        seed: Run seed
        prefix: Label namespace, so several blocks can share a seed

    Returns:
        Freshly initialized parameters
    """
    slice_a, slice_b, slice_c = cfg.slice_dims
    factors = {}
    for name, extent, width in zip(("w1", "w2", "w3"), cfg.dims, cfg.slice_dims):
        bound = fan_bound(extent, width)
        factors[name] = np.stack([
            uniform_block(seed, (extent, width), bound, prefix, name, r_index)
            for r_index in range(cfg.r_slices)
        ])
    core_bound = fan_bound(slice_a, slice_b * slice_c)
    factors["cores"] = np.stack([
        uniform_block(seed, (slice_a, slice_b, slice_c), core_bound, prefix, "cores", r_index)
        for r_index in range(cfg.r_slices)
    ])
    for name, extent in zip(("wz1", "wz2", "wz3"), cfg.dims):
        factors[name] = uniform_block(seed, (extent, cfg.d_z), fan_bound(extent, cfg.d_z), prefix, name, 0)
    return LttdParams.from_groups(factors)


def zeros_like(params: LttdParams) -> LttdParams:
    """Parameters of the same shapes filled with zeros."""
    return params.map_groups(np.zeros_like)
