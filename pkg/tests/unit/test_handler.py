"""Tests for the command-line entry point."""

import unittest
from pathlib import Path
from unittest.mock import patch

from app.common.errors import ConfigError
from handler import build_parser, main


class TestHandler(unittest.TestCase):
    """Test cases for argument parsing, dispatch and exit codes."""

    def test_parser_train(self):
        """Test the train sub-command arguments."""
        args = build_parser().parse_args(["train", "run.ini", "--out", "out", "--seed", "3", "--threads", "2"])
        self.assertEqual(args.config, Path("run.ini"))
        self.assertEqual((args.seed, args.threads, args.dump_data), (3, 2, False))

    def test_parser_requires_command(self):
        """Test that a sub-command is mandatory."""
        with self.assertRaises(SystemExit):
            build_parser().parse_args([])

    @patch("handler.cmd_verify")
    def test_verify_dispatch(self, mock_verify):
        """Test that verify forwards the hidden fault flag."""
        mock_verify.return_value = 1
        self.assertEqual(main(["verify", "--inject-fault"]), 1)
        mock_verify.assert_called_once_with(inject_fault=True)

    @patch("handler.cmd_param_count")
    def test_param_count_dispatch(self, mock_param_count):
        """Test that param-count passes the sweep flag."""
        mock_param_count.return_value = 0
        self.assertEqual(main(["param-count", "toy.ini", "--sweep"]), 0)
        mock_param_count.assert_called_once_with(Path("toy.ini"), sweep=True)

    @patch("handler.cmd_topology_info")
    def test_service_error_exit_code(self, mock_topology_info):
        """Test that domain errors exit with 1 and are logged."""
        mock_topology_info.side_effect = ConfigError("broken")
        with self.assertLogs("handler", level="ERROR") as logs:
            self.assertEqual(main(["topology-info", "missing.topo"]), 1)
        self.assertIn("broken", logs.output[0])

    @patch("handler.cmd_eval")
    def test_unexpected_error_exit_code(self, mock_eval):
        """Test that unexpected exceptions exit with 2."""
        mock_eval.side_effect = RuntimeError("boom")
        with self.assertLogs("handler", level="ERROR"):
            self.assertEqual(main(["eval", "params.bin"]), 2)
        mock_eval.assert_called_once_with(Path("params.bin"), seed=None)
