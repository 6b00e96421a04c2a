import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from sqzom.core_model import SystemParams

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def ideal():
    """Pure drive, unit detection efficiency."""
    return SystemParams(eta_in=1.0, n_c=0.0, eta_det=1.0)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for name, module in list(sys.modules.items()):
        if name.split(".")[-1] == "test_acceptance":
            lines.extend(getattr(module, "RESULTS", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
