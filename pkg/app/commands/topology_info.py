"""topology-info: structure and consensus residuals of a topology file."""

import sys
from pathlib import Path
from typing import TextIO

from app.federated.topology import load_topology, metropolis_weights


def cmd_topology_info(path: Path | str, out: TextIO = sys.stdout) -> int:
    """Print silo and edge counts, connectivity, in-degrees and Metropolis residuals.

    Directed (strict) topologies get their Metropolis matrix from the
    undirected closure.

    Returns:
        0
    """
    topology = load_topology(path)
    consensus = metropolis_weights(topology if topology.is_symmetric() else topology.undirected_closure())
    histogram = ", ".join(f"{degree}:{count}" for degree, count in topology.in_degree_histogram().items())
    out.write(f"{topology.name}: {topology.n_silos} silos, {len(topology.edges)} directed edges\n")
    out.write(f"strongly connected: {'yes' if topology.is_strongly_connected() else 'no'}\n")
    out.write(f"in-degree histogram (degree:silos): {histogram}\n")
    out.write(f"metropolis row-sum residual: {consensus.row_residual():.3e}\n")
    out.write(f"metropolis column-sum residual: {consensus.column_residual():.3e}\n")
    out.write(f"metropolis spectral gap: {consensus.spectral_gap():.6f}\n")
    return 0
