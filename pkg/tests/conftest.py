import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_complex(rng, shape, lo=0.3, hi=2.0):
    """Complex samples with magnitudes bounded away from the origin."""
    mag = rng.uniform(lo, hi, shape)
    ang = rng.uniform(-np.pi, np.pi, shape)
    return mag * np.exp(1j * ang)
