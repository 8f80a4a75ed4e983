import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wavenets.nets import EpsGrid, Mesh

settings.register_profile("wavenets", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("wavenets")

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture
def grid6():
    return EpsGrid.geometric(0.1, 6, 0.5)


@pytest.fixture
def grid4():
    return EpsGrid.geometric(0.1, 4, 0.5)


@pytest.fixture
def flat_mesh():
    # coarse space-time mesh for metric nets that are smooth on the mesh scale
    return Mesh.torus(16, times=(-1.0, 1.0, 21))


@pytest.fixture
def rng():
    return np.random.default_rng(7)


# --- acceptance summary ---------------------------------------------------------

_VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")
    config.stash[_VERDICTS] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("measured", "")
    item.config.stash[_VERDICTS][number] = (title, "FAIL" if rep.failed else "PASS", detail)


def pytest_terminal_summary(terminalreporter, config):
    verdicts = config.stash.get(_VERDICTS, {})
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(verdicts):
        title, status, detail = verdicts[number]
        terminalreporter.write_line(f"{status} {number:>2}. {title}" + (f"  [{detail}]" if detail else ""))
