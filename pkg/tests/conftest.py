"""
Shared fixtures. Puts the repository root on sys.path the same way main.py does.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import pytest  # noqa: E402

from config import RunConfig  # noqa: E402
from maps import preset_system  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow default-resolution checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running default-resolution check (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def doubling_cos():
    return preset_system("doubling-cos")


@pytest.fixture(scope="session")
def doubling_sin():
    return preset_system("doubling-sin")


@pytest.fixture(scope="session")
def doubling_flat():
    return preset_system("doubling-flat")


@pytest.fixture(scope="session")
def tripling_cos():
    return preset_system("tripling-cos")


@pytest.fixture(scope="session")
def perturbed():
    return preset_system("perturbed-doubling")


@pytest.fixture
def run_config(tmp_path):
    """A small, fast RunConfig writing into a temporary directory."""
    config = RunConfig()
    config.output_dir = str(tmp_path / "results")
    config.truncation = 16
    config.captivity_grid = [16, 9]
    config.trapped_grid = [32, 17]
    config.n_max = 4
    config.depth = 4
    config.cloud_size = 2000
    config.snapshot_times = [0, 2]
    config.steps = 2
    config.fractal_range = 16
    config.manifold_points = 64
    config.correlation_steps = 6
    config.fit_window = [1, 4]
    return config
