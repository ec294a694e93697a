"""verify: run the oracle and property checks."""

import logging
import sys
from typing import TextIO

from app.verification.checks import run_checks

logger = logging.getLogger(__name__)


def cmd_verify(inject_fault: bool = False, out: TextIO = sys.stdout) -> int:
    """Print one line per check and a summary.

    Args:
        inject_fault: Perturb the decomposed attention (negative control)
        out: Report stream

    Returns:
        0 if every check passed, 1 otherwise
    """
    results = run_checks(inject_fault=inject_fault)
    for result in results:
        out.write(result.report_line() + "\n")
    passed = sum(1 for result in results if result.passed)
    out.write(f"{passed}/{len(results)} checks passed\n")
    if passed != len(results):
        logger.error("%d verification checks failed", len(results) - passed)
        return 1
    return 0
