import numpy as np
import pytest

from bernoulli_model import BernoulliParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def uniform_params():
    return BernoulliParams(pA=0.5, pB=0.5)


@pytest.fixture
def asymmetric_params():
    return BernoulliParams(pA=0.3, pB=0.6)


@pytest.fixture
def symbol_files(tmp_path):
    def make(x: str, y: str):
        fx, fy = tmp_path / "x.txt", tmp_path / "y.txt"
        fx.write_text(x)
        fy.write_text(y)
        return str(fx), str(fy)

    return make
