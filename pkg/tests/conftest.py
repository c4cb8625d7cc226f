import json
import os

import pytest
from hypothesis import HealthCheck, settings

from scarlab import cli

settings.register_profile(
    "scarlab", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "scarlab"))

L8_CONFIG = {
    "model": {"family": "xxc", "N": 3, "A": [1], "B": [2, 3], "gamma": {"num": 1, "den": 4}, "L": 8},
    "perturbation": {"kind": "random_sx_neighbor", "low": 0.5, "high": 1.5},
    "splitting": {"J1": 0.31, "J2": 0.17},
    "analysis": ["verify_scars", "fragmentation", "spectrum", "levelstats", "entanglement_scatter"],
    "output_dir": "out",
    "seed": 42,
}


@pytest.fixture(scope="session")
def l8_run(tmp_path_factory):
    """One dense pipeline run of the N = 3, L = 8 chain shared by several tests."""
    root = tmp_path_factory.mktemp("l8")
    path = root / "config.json"
    path.write_text(json.dumps(L8_CONFIG))
    code = cli.run(path)
    return code, root / "out"


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
