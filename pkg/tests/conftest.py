import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fso import build_fso  # noqa: E402
from helpers import ACCEPTANCE  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "fso" / "data"

@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture
def building_spec():
    return json.loads((DATA / "building.json").read_text())


@pytest.fixture
def building(building_spec):
    return build_fso(building_spec)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
