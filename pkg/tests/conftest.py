import pytest

from downgrading.model import ModelParams


def fig1_params():
    return ModelParams(
        A=(1, 2, 4, 8, 16), lam=(0.25, 0.2, 0.15, 0.1, 0.05), mu=(1, 1, 1, 1, 1), c=1.0, c0=0.97
    )


def video_params(lam2=0.7, c0=0.95, N=None):
    return ModelParams(A=(1, 2), lam=(0.0, lam2), mu=(1, 1), c=1.0, c0=c0, N=N)


def three_class_params():
    return ModelParams(A=(1, 2, 3), lam=(0.2, 0.3, 0.3), mu=(1, 1.2, 1.5), c=1.0, c0=0.9)


@pytest.fixture
def fig1():
    return fig1_params()


@pytest.fixture
def video():
    return video_params()


@pytest.fixture
def three():
    return three_class_params()
