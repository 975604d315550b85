import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from kernel import Vocabulary  # noqa: E402
from revision import RevisionRanking  # noqa: E402
from update import UpdateStructure  # noqa: E402

DATA = ROOT / "data"


@pytest.fixture
def pq():
    return Vocabulary.of("p", "q")


@pytest.fixture
def standard_ranking(pq):
    """{11:0, 10:1, 01:1, 00:2}"""
    return RevisionRanking.from_bits(pq, {"11": 0, "10": 1, "01": 1, "00": 2})


@pytest.fixture
def car():
    return Vocabulary.of("parked", "full")


@pytest.fixture
def car_structure(car):
    return UpdateStructure(car)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def data_dir():
    return DATA
