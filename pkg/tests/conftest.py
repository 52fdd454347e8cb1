import numpy as np
import pytest

from genmatte.codec import LatentCodec
from genmatte.schedule import make_schedule


@pytest.fixture(scope="session")
def schedule1000():
    return make_schedule(1000, 1e-4, 0.02)


@pytest.fixture(scope="session")
def codec_f2_identity():
    return LatentCodec(2, 1, None)


@pytest.fixture(scope="session")
def codec_f2_matte():
    return LatentCodec(2, 1, 11)


@pytest.fixture(scope="session")
def codec_f2_image():
    return LatentCodec(2, 1, 22)


@pytest.fixture(scope="session")
def codec_f2_rgb():
    return LatentCodec(2, 3, 22)


def rand_tensor(rng: np.random.Generator, c, h, w, lo=-1.0, hi=1.0):
    return rng.uniform(lo, hi, size=(c, h, w))
