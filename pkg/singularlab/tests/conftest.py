from fractions import Fraction

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from singularlab.config import Config
from singularlab.dependencies.config import get_config
from singularlab.main import app
from singularlab.numeric import quad
from singularlab.subspace import SubspaceParam


@pytest.fixture(scope="session")
def config() -> Config:
    return Config()


@pytest.fixture(scope="session")
def small_config() -> Config:
    return Config(schedule=[16, 64, 256, 1024], k_max=12)


@pytest.fixture(scope="session")
def client(small_config) -> TestClient:
    def _get_config_override():
        return small_config

    app.dependency_overrides[get_config] = _get_config_override
    return TestClient(app)


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture(scope="session")
def sqrt2():
    return quad(0, 1, 2)


@pytest.fixture(scope="session")
def sqrt3():
    return quad(0, 1, 3)


@pytest.fixture(scope="session")
def golden():
    return quad(Fraction(1, 2), Fraction(1, 2), 5)


@pytest.fixture(scope="session")
def rational_plane() -> SubspaceParam:
    return SubspaceParam.from_matrix([[Fraction(1, 2)], [Fraction(1, 3)]])


@pytest.fixture(scope="session")
def irrational_plane(sqrt2, sqrt3) -> SubspaceParam:
    return SubspaceParam.from_matrix([[sqrt2], [sqrt3]])
