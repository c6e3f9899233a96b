import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uastrack.imagebuf import GrayImage


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


@pytest.fixture
def ramp4():
    """4x4 image whose sample at (x, y) is y*4 + x."""
    return GrayImage(np.arange(16, dtype=np.uint8).reshape(4, 4))


@pytest.fixture
def checker22x36():
    yy, xx = np.mgrid[0:36, 0:22]
    return GrayImage((((xx // 3 + yy // 3) % 2) * 150 + 40).astype(np.uint8))
