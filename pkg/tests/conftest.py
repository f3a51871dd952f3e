import numpy as np
import pytest

from segsi.activations import relu
from segsi.network import (
    Activation,
    Conv2D,
    Dense,
    MaxPool2x2,
    NetworkSpec,
    OutputSign,
    UpsampleNearest2x,
)


@pytest.fixture
def identity_net():
    return NetworkSpec((Dense(np.eye(4), np.zeros(4)), OutputSign()), 2, 2, 1)


@pytest.fixture
def relu_net():
    """4-pixel identity -> ReLU -> sign."""
    return NetworkSpec(
        (Dense(np.eye(4), np.zeros(4)), Activation(relu()), OutputSign()), 2, 2, 1
    )


def small_random_net(seed, n=16):
    """Random tiny CNN used in property tests."""
    side = int(np.sqrt(n))
    rng = np.random.default_rng(seed)
    k1 = rng.standard_normal((3, 3, 1, 2)) / 3.0
    k2 = rng.standard_normal((3, 3, 2, 1)) / 4.0
    return NetworkSpec(
        (
            Conv2D(k1, rng.standard_normal(2) * 0.1),
            Activation(relu()),
            MaxPool2x2(),
            UpsampleNearest2x(),
            Conv2D(k2, rng.standard_normal(1) * 0.1),
            OutputSign(),
        ),
        side,
        side,
        1,
    )
