import numpy as np
import pytest

from robench.frames import Image


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_image(rng, h=16, w=16, channels=1):
    return Image(rng.integers(0, 256, (h, w, channels), dtype=np.uint8))


def constant_image(value, h=8, w=8, channels=1):
    return Image(np.full((h, w, channels), value, dtype=np.uint8))
