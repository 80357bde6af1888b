from pathlib import Path

import pytest

from mrtsp.oracle import held_karp
from mrtsp.tsplib import load_instance

INSTANCE_DIR = Path(__file__).resolve().parent.parent / "instances"


@pytest.fixture(scope="session")
def br17():
    return load_instance(INSTANCE_DIR / "br17.atsp")


@pytest.fixture(scope="session")
def br17_exact(br17):
    # one Held-Karp solve shared by every test that needs br17 ground truth
    return held_karp(br17)
