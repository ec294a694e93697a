"""Parameter accounting of the full tensor against the decomposition."""

import math

from app.common.errors import ConfigError
from app.lttd.dtos import LttdConfig, ParamCount

MAX_COUNT = 2 ** 63 - 1


def param_count(cfg: LttdConfig) -> ParamCount:
    """Count parameters of the full tensor T and of the decomposed block.

    full = (n1 d1)(n2 d2)(n3 d3) d_z
    decomposed = R (d1 d1/R + d2 d2/R + d3 d3/R) + R (d1 d2 d3 / R^3) + (d1 + d2 + d3) d_z

    Raises:
        ConfigError: If a count does not fit in 63 bits
    """
    r_slices = cfg.r_slices
    full = math.prod(count * dim for count, dim in zip(cfg.counts, cfg.dims)) * cfg.d_z
    factors = r_slices * sum(dim * (dim // r_slices) for dim in cfg.dims)
    cores = r_slices * math.prod(dim // r_slices for dim in cfg.dims)
    projections = sum(cfg.dims) * cfg.d_z
    decomposed = factors + cores + projections
    if full > MAX_COUNT or decomposed > MAX_COUNT:
        raise ConfigError("Parameter count exceeds 63 bits", {"full": full, "decomposed": decomposed})
    return ParamCount(
        full_tensor_params=full,
        decomposed_params=decomposed,
        decomposition_rate=full / decomposed,
    )


def gcd_divisors(cfg: LttdConfig) -> list[int]:
    """Every divisor of gcd(d1, d2, d3) in increasing order."""
    limit = math.gcd(*cfg.dims)
    return [candidate for candidate in range(1, limit + 1) if limit % candidate == 0]


def sweep_slices(cfg: LttdConfig) -> list[tuple[int, ParamCount]]:
    """Param counts for every admissible slicing parameter."""
    return [
        (r_slices, param_count(cfg.model_copy(update={"r_slices": r_slices})))
        for r_slices in gcd_divisors(cfg)
    ]
