import json
import pathlib

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# invariant properties run 10^3 randomized cases each
settings.register_profile("invariants", max_examples=1000, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("invariants")

ORACLES = json.loads((pathlib.Path(__file__).parent / "oracles" / "oracles.json").read_text())


@pytest.fixture
def oracles():
    return ORACLES


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


RESULTS = {}


def record(criterion, passed, detail=""):
    """Store one acceptance outcome for the end-of-run summary."""
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}" + (f"  {detail}" if detail else "")
    RESULTS[criterion] = line
    print(line)


def pytest_collection_modifyitems(items):
    for item in items:
        if getattr(getattr(item, "obj", None), "is_hypothesis_test", False):
            item.add_marker("invariant")


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
