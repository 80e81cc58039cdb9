import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from momentcert import Scenario, build_structure


@pytest.fixture(scope="session")
def structure_322():
    return build_structure(Scenario(3, 2), 2)


@pytest.fixture(scope="session")
def structure_332():
    return build_structure(Scenario(3, 3), 2)


@pytest.fixture(scope="session")
def structure_222():
    return build_structure(Scenario(2, 2), 2)
