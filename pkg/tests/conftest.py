import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from contentevo.intensity import weekly  # noqa: E402

import oracles  # noqa: E402


@pytest.fixture(scope="session")
def weekly_rpc():
    """Weekly recurrent step rate with the workday/weekend levels used throughout the tests."""
    return weekly(oracles.weekly_blocks())


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
