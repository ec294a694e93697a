"""param-count: full against decomposed parameter counts."""

import sys
from pathlib import Path
from typing import TextIO

from app.commands.config_file import load_run_config
from app.lttd.accounting import param_count, sweep_slices
from app.lttd.dtos import ParamCount


def _format_line(r_slices: int, counts: ParamCount) -> str:
    return (
        f"{r_slices:>8} {counts.full_tensor_params:>20} "
        f"{counts.decomposed_params:>16} {counts.decomposition_rate:>16.3f}"
    )


def cmd_param_count(config_path: Path, sweep: bool = False, out: TextIO = sys.stdout) -> int:
    """Report exact counts for the configured block, or for every admissible R.

    Args:
        config_path: Config file with an [lttd] or [model] section
        sweep: List every divisor of gcd(d1, d2, d3)
        out: Report stream

    Returns:
        0
    """
    cfg = load_run_config(config_path).block_config()
    if sweep:
        out.write(f"{'r_slices':>8} {'full':>20} {'decomposed':>16} {'rate':>16}\n")
        for r_slices, counts in sweep_slices(cfg):
            out.write(_format_line(r_slices, counts) + "\n")
        return 0
    counts = param_count(cfg)
    out.write(f"full_tensor_params: {counts.full_tensor_params}\n")
    out.write(f"decomposed_params: {counts.decomposed_params}\n")
    out.write(f"decomposition_rate: {counts.decomposition_rate:.3f}\n")
    return 0
