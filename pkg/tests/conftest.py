import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scoreloop.store import Workspace


@pytest.fixture
def workspace(tmp_path) -> Workspace:
    """Fresh workspace seeded with the packaged task fixtures."""
    return Workspace.init(tmp_path / "data")


@pytest.fixture
def bare_workspace(tmp_path) -> Workspace:
    return Workspace.init(tmp_path / "bare", with_fixtures=False)


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {verdict}", flush=True)
