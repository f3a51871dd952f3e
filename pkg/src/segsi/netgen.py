"""Deterministic network generators for the experiment harness.

Weights are fixed-seed Gaussian draws scaled by 1/sqrt(fan-in) with zero
biases, so every experiment runs without a trainer; trained weights are a
drop-in replacement via the exchange format.
"""

from __future__ import annotations

import math

import numpy as np

from segsi.activations import PiecewiseLinearActivation, approximate_activation, relu
from segsi.errors import ValidationError
from segsi.network import (
    Activation,
    Conv2D,
    Dense,
    MaxPool2x2,
    NetworkSpec,
    OutputSign,
    UpsampleNearest2x,
)

DEFAULT_NET_SEED = 11

_WEIGHT_MEAN = 1.0  # positive filter mean: the net responds to local brightness
_CALIBRATION_IMAGES = 64


def make_cnn(n: int, seed: int = DEFAULT_NET_SEED) -> NetworkSpec:
    """4-layer segmentation CNN: conv(3,3,1,4) + ReLU, pool, upsample, conv(3,3,4,1), sign.

    Weights are fixed-seed Gaussian draws scaled by 1/sqrt(fan-in) and
    shifted to a positive mean, so the output tracks smoothed intensity the
    way a trained segmenter does; the output bias is calibrated on a
    fixed-seed batch of null images so both labels occur.
    """
    side = math.isqrt(n)
    if side * side != n:
        raise ValidationError(f"n={n} is not a perfect square")
    if side % 2:
        raise ValidationError(f"grid side {side} must be even for 2x2 pooling")
    rng = np.random.default_rng(seed)
    k1 = (rng.standard_normal((3, 3, 1, 4)) + _WEIGHT_MEAN) / 3.0   # fan-in 9
    k2 = (rng.standard_normal((3, 3, 4, 1)) + _WEIGHT_MEAN) / 6.0   # fan-in 36
    b2 = _calibrate_output_bias(k1, k2, n, side, seed)
    layers = (
        Conv2D(k1, np.zeros(4)),
        Activation(relu()),
        MaxPool2x2(),
        UpsampleNearest2x(),
        Conv2D(k2, np.array([b2])),
        OutputSign(),
    )
    return NetworkSpec(layers, side, side, 1)


def _calibrate_output_bias(k1, k2, n, side, seed) -> float:
    from segsi.network import _conv_same, _pool_windows, _upsample

    seed_key = [int(s) for s in np.atleast_1d(np.asarray(seed, dtype=np.int64))]
    cal = np.random.default_rng(seed_key + [12345])
    medians = []
    for _ in range(_CALIBRATION_IMAGES):
        x = cal.standard_normal(n).reshape(side, side, 1)
        h = np.maximum(_conv_same(x, k1), 0.0)
        h = np.max(_pool_windows(h), axis=-2)
        h = _upsample(h)
        h = _conv_same(h, k2)
        medians.append(np.median(h))
    return -float(np.mean(medians))


def make_dense(
    n_in: int = 8,
    n_hidden: int = 16,
    activation: PiecewiseLinearActivation | None = None,
    seed: int = DEFAULT_NET_SEED,
    height: int | None = None,
    width: int | None = None,
) -> NetworkSpec:
    """3-layer dense net (in -> hidden -> in) with a sign output per pixel."""
    if activation is None:
        activation = relu()
    if height is None or width is None:
        side = math.isqrt(n_in)
        if side * side == n_in:
            height, width = side, side
        else:
            height, width = 2, n_in // 2
            if height * width != n_in:
                raise ValidationError(f"cannot infer a grid for n={n_in}")
    rng = np.random.default_rng(seed)
    w1 = rng.standard_normal((n_hidden, n_in)) / math.sqrt(n_in)
    w2 = rng.standard_normal((n_in, n_hidden)) / math.sqrt(n_hidden)
    layers = (
        Dense(w1, np.zeros(n_hidden)),
        Activation(activation),
        Dense(w2, np.zeros(n_in)),
        OutputSign(),
    )
    return NetworkSpec(layers, height, width, 1)


def make_identity(n: int, height: int | None = None, width: int | None = None) -> NetworkSpec:
    """Sign of the raw pixels; has no nonlinearity and hence a single region."""
    if height is None or width is None:
        side = math.isqrt(n)
        if side * side != n:
            raise ValidationError(f"n={n} is not a perfect square")
        height = width = side
    return NetworkSpec((Dense(np.eye(n), np.zeros(n)), OutputSign()), height, width, 1)


def make_pivot_net(activation: str, n: int, seed: int = DEFAULT_NET_SEED) -> NetworkSpec:
    """Network for pivot-uniformity studies.

    'relu' builds the segmentation CNN at the given n; the smooth-activation
    variants build the 8-16-8 dense net with the piecewise approximation of
    the named function ('sigmoid-3cut', 'tanh-3cut', 'sigmoid-5cut', ...).
    """
    if activation == "relu":
        return make_cnn(n, seed)
    try:
        kind, cut_part = activation.split("-", 1)
        cuts = int(cut_part.removesuffix("cut"))
    except ValueError as exc:
        raise ValidationError(f"unknown pivot activation {activation!r}") from exc
    fn = approximate_activation(kind, cuts)
    return make_dense(8, 16, activation=fn, seed=seed)
