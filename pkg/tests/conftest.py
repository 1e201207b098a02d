import os
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from phase_transfer.dataset import generate_split  # noqa: E402
from phase_transfer.encode import EncodedSample, string_to_bits  # noqa: E402

CONFIG_DIR = ROOT / "configs"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size experiment runs (set PHASE_TRANSFER_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("PHASE_TRANSFER_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set PHASE_TRANSFER_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def encoded(text, label=None):
    return EncodedSample(bits=string_to_bits(text), label=label)


@pytest.fixture(scope="session")
def small_split():
    """N=6 chain, 20 grid points, one test kappa."""
    return generate_split(6, 20, [0.2], progress=False)


@pytest.fixture
def worked_training():
    return [encoded("0000", 0), encoded("0001", 0), encoded("1110", 1), encoded("1111", 1)]
