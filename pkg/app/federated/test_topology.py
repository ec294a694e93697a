"""Tests for topologies and consensus matrices."""

import tempfile
from pathlib import Path

import numpy as np

from app.common.enums import ConsensusWeights
from app.federated.errors import TopologyError
from app.federated.topology import (
    bundled_topologies,
    complete_topology,
    consensus_matrix,
    ConsensusMatrix,
    load_topology,
    metropolis_weights,
    parse_topology,
    Topology,
    uniform_weights,
)
from tests.conftest import BaseTestCase

RING_3 = "silos 3\n0 1\n1 2\n2 0\n"
STAR_4 = "silos 4\n0 1\n0 2\n0 3\n"


class TestParseTopology(BaseTestCase):
    """Test cases for parse_topology and load_topology."""

    def test_strict_ring(self):
        """Test that a strict ring keeps its direction."""
        topology = parse_topology(RING_3, strict=True)
        self.assertEqual(topology.in_neighbors(0), frozenset({2}))
        self.assertFalse(topology.is_symmetric())
        self.assertTrue(topology.is_strongly_connected())

    def test_closure_by_default(self):
        """Test that edges are closed symmetrically unless strict."""
        topology = parse_topology(RING_3)
        self.assertEqual(topology.in_neighbors(0), frozenset({1, 2}))
        self.assertTrue(topology.is_symmetric())

    def test_strict_flag_in_file(self):
        """Test the strict line, comments and the name line."""
        topology = parse_topology("# ring\nname tri\nstrict\n" + RING_3)
        self.assertTrue(topology.strict)
        self.assertEqual(topology.name, "tri")
        self.assertEqual(len(topology.edges), 3)

    def test_self_loop(self):
        """Test that an edge 2 -> 2 is refused."""
        with self.assertRaises(TopologyError):
            parse_topology("silos 3\n2 2\n")

    def test_zero_silos(self):
        """Test that a topology needs a silo."""
        with self.assertRaises(TopologyError):
            parse_topology("silos 0\n")

    def test_parse_errors(self):
        """Test a missing header, an unknown silo and a malformed line."""
        for text in ("0 1\n", "silos 2\n0 5\n", "silos 2\n0 1 2\n", "silos two\n"):
            with self.assertRaises(TopologyError, msg=text):
                parse_topology(text)
        with self.assertRaises(TopologyError):
            parse_topology("# nothing\n")

    def test_bundled_sizes(self):
        """Test the silo counts of the shipped topologies."""
        sizes = {path.stem: load_topology(path).n_silos for path in bundled_topologies()}
        self.assertEqual(sizes, {"exodus": 79, "gaia": 11, "nws": 22})

    def test_bundled_by_name(self):
        """Test resolving gaia and gaia.topo to the bundled file."""
        self.assertEqual(load_topology("gaia").n_silos, 11)
        self.assertEqual(load_topology("gaia.topo").name, "gaia")
        self.assertTrue(load_topology("nws").is_strongly_connected())

    def test_missing_file(self):
        """Test that an unreadable path is a topology error."""
        with tempfile.TemporaryDirectory() as directory:
            with self.assertRaises(TopologyError):
                load_topology(Path(directory) / "absent.topo")

    def test_disconnected(self):
        """Test the strong connectivity of two separate pairs."""
        topology = parse_topology("silos 4\n0 1\n2 3\n")
        self.assertFalse(topology.is_strongly_connected())
        self.assertEqual(topology.in_degree_histogram(), {1: 4})


class TestConsensusWeights(BaseTestCase):
    """Test cases for metropolis_weights and uniform_weights."""

    def test_two_silos(self):
        """Test a single edge pair."""
        weights = metropolis_weights(complete_topology(2)).a
        np.testing.assert_array_equal(weights, [[0.5, 0.5], [0.5, 0.5]])

    def test_complete_graph(self):
        """Test that a complete graph gets 1/n everywhere."""
        weights = metropolis_weights(complete_topology(5)).a
        np.testing.assert_allclose(weights, np.full((5, 5), 0.2), rtol=0, atol=1e-12)

    def test_path_doubly_stochastic(self):
        """Test row and column sums on the path 0-1-2."""
        matrix = metropolis_weights(parse_topology("silos 3\n0 1\n1 2\n"))
        self.assertLessEqual(matrix.row_residual(), 1e-12)
        self.assertLessEqual(matrix.column_residual(), 1e-12)
        self.assertEqual(matrix.a[0, 2], 0.0)

    def test_bundled_doubly_stochastic(self):
        """Test Metropolis weights of every shipped topology."""
        for path in bundled_topologies():
            matrix = metropolis_weights(load_topology(path))
            self.assertLessEqual(matrix.column_residual(), 1e-12, path.stem)
            self.assertGreater(matrix.spectral_gap(), 0.0, path.stem)

    def test_asymmetric_refused(self):
        """Test that Metropolis weights need a symmetric topology."""
        with self.assertRaises(TopologyError):
            metropolis_weights(parse_topology(RING_3, strict=True))

    def test_uniform_support(self):
        """Test that uniform weights cover exactly the closed in-neighborhood."""
        topology = parse_topology(RING_3, strict=True)
        matrix = uniform_weights(topology)
        np.testing.assert_array_equal(matrix.a[0], [0.5, 0.0, 0.5])
        self.assertEqual(matrix.in_degrees, (1, 1, 1))

    def test_star(self):
        """Test the hub of a star."""
        topology = parse_topology(STAR_4)
        self.assertEqual(topology.in_degrees(), (3, 1, 1, 1))
        matrix = consensus_matrix(topology, ConsensusWeights.METROPOLIS)
        self.assertAlmostEqual(matrix.a[1, 0], 0.25)
        self.assertAlmostEqual(matrix.a[1, 1], 0.75)

    def test_support_outside_neighborhood(self):
        """Test that a weight on a non-neighbor is refused."""
        topology = parse_topology(STAR_4)
        leaked = np.array([
            [0.25, 0.25, 0.25, 0.25],
            [0.25, 0.5, 0.25, 0.0],
            [0.5, 0.0, 0.5, 0.0],
            [0.5, 0.0, 0.0, 0.5],
        ])
        with self.assertRaises(TopologyError):
            ConsensusMatrix(a=leaked, in_degrees=topology.in_degrees()).check_support(topology)

    def test_support_follows_edges(self):
        """Test that both constructions stay on the closed in-neighborhoods of bundled topologies."""
        for path in bundled_topologies():
            topology = load_topology(path)
            for construction in ConsensusWeights:
                consensus_matrix(topology, construction).check_support(topology)

    def test_complete_spectral_gap(self):
        """Test that averaging over a complete graph mixes in one step."""
        self.assertAlmostEqual(uniform_weights(complete_topology(4)).spectral_gap(), 1.0, places=12)

    def test_invalid_matrix(self):
        """Test that rows must sum to one and weights be non-negative."""
        with self.assertRaises(TopologyError):
            ConsensusMatrix(a=np.array([[0.5, 0.4], [0.5, 0.5]]), in_degrees=(1, 1))
        with self.assertRaises(TopologyError):
            ConsensusMatrix(a=np.array([[1.5, -0.5], [0.5, 0.5]]), in_degrees=(1, 1))

    def test_topology_validation(self):
        """Test direct construction rules."""
        with self.assertRaises(TopologyError):
            Topology(n_silos=2, edges=frozenset({(0, 2)}))
