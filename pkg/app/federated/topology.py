"""Silo topologies and consensus matrices.

Topology files are line oriented::

    # comment
    name gaia
    silos 11
    strict
    0 1
    1 2

``silos N`` is required before any edge. Each ``src dst`` line is a directed
edge src -> dst. Unless the ``strict`` flag is present the symmetric closure is
taken on load.
"""

from collections import Counter
from dataclasses import dataclass
import logging
from pathlib import Path

import networkx as nx
import numpy as np

from app.common.enums import ConsensusWeights
from app.federated.errors import TopologyError

logger = logging.getLogger(__name__)

BUNDLED_DIR = Path(__file__).parent / "topologies"
STOCHASTIC_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Topology:
    """Directed silo graph; self-loops are implicit and never stored."""

    n_silos: int
    edges: frozenset[tuple[int, int]]
    name: str = "unnamed"
    strict: bool = False

    def __post_init__(self) -> None:
        """Validate silo count and edge endpoints."""
        if self.n_silos < 1:
            raise TopologyError("A topology needs at least one silo", {"silos": self.n_silos})
        for src, dst in self.edges:
            if src == dst:
                raise TopologyError(f"Self-loop on silo {src}", {"edge": (src, dst)})
            if not (0 <= src < self.n_silos and 0 <= dst < self.n_silos):
                raise TopologyError(f"Edge {src}->{dst} names an unknown silo", {"edge": (src, dst)})

    def in_neighbors(self, silo_id: int) -> frozenset[int]:
        """Silos whose parameters silo_id reads when averaging."""
        return frozenset(src for src, dst in self.edges if dst == silo_id)

    def in_degrees(self) -> tuple[int, ...]:
        """|N_i+| for every silo."""
        degrees = Counter(dst for _, dst in self.edges)
        return tuple(degrees[silo_id] for silo_id in range(self.n_silos))

    def is_symmetric(self) -> bool:
        """Whether every edge has its reverse."""
        return all((dst, src) in self.edges for src, dst in self.edges)

    def undirected_closure(self) -> "Topology":
        """Same silos with every edge made bidirectional."""
        closed = self.edges | {(dst, src) for src, dst in self.edges}
        return Topology(n_silos=self.n_silos, edges=frozenset(closed), name=self.name, strict=self.strict)

    def graph(self) -> nx.DiGraph:
        """networkx view, every silo present even when isolated."""
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(self.n_silos))
        digraph.add_edges_from(sorted(self.edges))
        return digraph

    def is_strongly_connected(self) -> bool:
        """Whether every silo can reach every other along directed edges."""
        return nx.is_strongly_connected(self.graph())

    def in_degree_histogram(self) -> dict[int, int]:
        """Map in-degree -> number of silos, sorted by degree."""
        return dict(sorted(Counter(self.in_degrees()).items()))


@dataclass(frozen=True)
class ConsensusMatrix:
    """Row-stochastic mixing weights; a[i][j] > 0 only for j in N_i+ or j = i."""

    a: np.ndarray
    in_degrees: tuple[int, ...]

    def __post_init__(self) -> None:
        """Check shape, sign and row sums."""
        weights = np.asarray(self.a, dtype=np.float64)
        size = len(self.in_degrees)
        if weights.shape != (size, size):
            raise TopologyError("Consensus matrix must be n x n", {"shape": weights.shape})
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise TopologyError("Consensus weights must be finite and non-negative", {"shape": weights.shape})
        if self.row_residual(weights) > STOCHASTIC_TOLERANCE:
            raise TopologyError("Consensus rows must sum to 1", {"residual": self.row_residual(weights)})
        object.__setattr__(self, "a", weights)

    @property
    def n_silos(self) -> int:
        """Matrix size."""
        return self.a.shape[0]

    def row_residual(self, weights: np.ndarray | None = None) -> float:
        """max_i |sum_j a[i][j] - 1|."""
        matrix = self.a if weights is None else weights
        return float(np.max(np.abs(matrix.sum(axis=1) - 1.0)))

    def column_residual(self) -> float:
        """max_j |sum_i a[i][j] - 1|."""
        return float(np.max(np.abs(self.a.sum(axis=0) - 1.0)))

    def check_support(self, topology: Topology) -> None:
        """Weights may be non-zero only on a silo's closed in-neighborhood.

        Raises:
            TopologyError: If the sizes differ or a weight leaves the neighborhood
        """
        if topology.n_silos != self.n_silos:
            raise TopologyError(
                "Consensus matrix does not match the topology",
                {"silos": topology.n_silos, "matrix": self.n_silos},
            )
        for silo_id in range(self.n_silos):
            allowed = topology.in_neighbors(silo_id) | {silo_id}
            stray = [int(src) for src in np.flatnonzero(self.a[silo_id]) if src not in allowed]
            if stray:
                raise TopologyError(
                    f"Silo {silo_id} weights silos outside its in-neighborhood",
                    {"silo": silo_id, "sources": stray},
                )

    def spectral_gap(self) -> float:
        """1 - second largest eigenvalue modulus."""
        if self.n_silos == 1:
            return 1.0
        moduli = np.sort(np.abs(np.linalg.eigvals(self.a)))[::-1]
        return max(0.0, float(1.0 - moduli[1]))


def parse_topology(text: str, name: str = "unnamed", strict: bool | None = None) -> Topology:
    """Parse topology text.

    Args:
        text: File contents
        name: Default name when the file has no ``name`` line
        strict: Overrides the file's ``strict`` flag when given

    Returns:
        Validated topology, symmetric unless strict

    Raises:
        TopologyError: On parse errors, missing header, self-loops or zero silos
    """
    n_silos = None
    file_strict = False
    edges: set[tuple[int, int]] = set()
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        tokens = raw_line.split("#", 1)[0].split()
        if not tokens:
            continue
        keyword = tokens[0].lower()
        if keyword == "silos" and len(tokens) == 2:
            n_silos = _parse_int(tokens[1], line_number)
        elif keyword == "name" and len(tokens) >= 2:
            name = " ".join(tokens[1:])
        elif keyword == "strict" and len(tokens) == 1:
            file_strict = True
        elif len(tokens) == 2:
            if n_silos is None:
                raise TopologyError(f"Edge before 'silos' header on line {line_number}", {"line": line_number})
            edges.add((_parse_int(tokens[0], line_number), _parse_int(tokens[1], line_number)))
        else:
            raise TopologyError(f"Cannot parse line {line_number}: {raw_line.strip()!r}", {"line": line_number})
    if n_silos is None:
        raise TopologyError("Missing 'silos N' header", {"name": name})
    is_strict = file_strict if strict is None else strict
    topology = Topology(n_silos=n_silos, edges=frozenset(edges), name=name, strict=is_strict)
    return topology if is_strict else topology.undirected_closure()


def _parse_int(token: str, line_number: int) -> int:
    try:
        return int(token)
    except ValueError as parse_error:
        raise TopologyError(
            f"Expected an integer on line {line_number}, got {token!r}", {"line": line_number},
        ) from parse_error


def resolve_topology_path(reference: str) -> Path:
    """A file path, or a bundled topology given as ``gaia`` or ``gaia.topo``."""
    given = Path(reference)
    if given.is_file():
        return given
    for candidate in (BUNDLED_DIR / reference, BUNDLED_DIR / f"{reference}.topo"):
        if candidate.is_file():
            return candidate
    return given


def load_topology(path: Path | str, strict: bool | None = None) -> Topology:
    """Read and validate a topology file.

    Raises:
        TopologyError: If the file is unreadable or invalid
    """
    topology_path = resolve_topology_path(str(path))
    try:
        text = topology_path.read_text(encoding="utf-8")
    except OSError as read_error:
        raise TopologyError(
            f"Cannot read topology {topology_path}: {read_error.strerror}", {"path": str(topology_path)},
        ) from read_error
    topology = parse_topology(text, name=topology_path.stem, strict=strict)
    logger.debug("Loaded topology %s with %d silos", topology.name, topology.n_silos)
    return topology


def bundled_topologies() -> list[Path]:
    """Topology files shipped with the package."""
    return sorted(BUNDLED_DIR.glob("*.topo"))


def complete_topology(n_silos: int, name: str = "complete") -> Topology:
    """Every silo connected to every other."""
    edges = frozenset((src, dst) for src in range(n_silos) for dst in range(n_silos) if src != dst)
    return Topology(n_silos=n_silos, edges=edges, name=name)


def metropolis_weights(topology: Topology) -> ConsensusMatrix:
    """Metropolis-Hastings weights a[i][j] = 1 / (1 + max(deg_i, deg_j)).

    Raises:
        TopologyError: If the topology is not symmetric
    """
    if not topology.is_symmetric():
        raise TopologyError(
            f"Topology {topology.name} is not symmetric; Metropolis weights need an undirected graph",
            {"name": topology.name},
        )
    degrees = topology.in_degrees()
    weights = np.zeros((topology.n_silos, topology.n_silos))
    for silo_id in range(topology.n_silos):
        for neighbor in sorted(topology.in_neighbors(silo_id)):
            weights[silo_id, neighbor] = 1.0 / (1.0 + max(degrees[silo_id], degrees[neighbor]))
        weights[silo_id, silo_id] = 1.0 - weights[silo_id].sum()
    return ConsensusMatrix(a=weights, in_degrees=degrees)


def uniform_weights(topology: Topology) -> ConsensusMatrix:
    """Equal weights 1 / (|N_i+| + 1) over each closed in-neighborhood."""
    degrees = topology.in_degrees()
    weights = np.zeros((topology.n_silos, topology.n_silos))
    for silo_id in range(topology.n_silos):
        share = 1.0 / (degrees[silo_id] + 1)
        for member in topology.in_neighbors(silo_id) | {silo_id}:
            weights[silo_id, member] = share
    return ConsensusMatrix(a=weights, in_degrees=degrees)


def consensus_matrix(topology: Topology, construction: ConsensusWeights) -> ConsensusMatrix:
    """Build the configured consensus matrix and check it against the edges."""
    if construction == ConsensusWeights.UNIFORM:
        matrix = uniform_weights(topology)
    else:
        matrix = metropolis_weights(topology)
    matrix.check_support(topology)
    return matrix
