import math

import pytest
from hypothesis import settings

from leafpress.dynamics import CAT_BLOCK3, CAT_MAP, build_linear_model

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

LOG_LAMBDA_U = math.log((3 + math.sqrt(5)) / 2)


@pytest.fixture(scope="session")
def cat():
    return build_linear_model(CAT_MAP)


@pytest.fixture(scope="session")
def block3():
    return build_linear_model(CAT_BLOCK3)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
