import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def random_unit_atoms(rng, d, n):
    a = rng.standard_normal((d, n))
    return a / np.linalg.norm(a, axis=0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
