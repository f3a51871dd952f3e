"""Piecewise-linear activation functions.

An activation is a continuous piecewise-linear map given by strictly
increasing knots and one (slope, intercept) pair per piece; piece i covers
(knots[i-1], knots[i]] with open ends at +/-inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from segsi.errors import ValidationError

_CONTINUITY_RTOL = 1e-9


@dataclass(frozen=True)
class PiecewiseLinearActivation:
    """Continuous piecewise-linear scalar function, applied elementwise."""

    name: str
    knots: np.ndarray       # shape (k,), strictly increasing; may be empty
    slopes: np.ndarray      # shape (k+1,)
    intercepts: np.ndarray  # shape (k+1,)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        slopes = np.asarray(self.slopes, dtype=np.float64)
        intercepts = np.asarray(self.intercepts, dtype=np.float64)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "intercepts", intercepts)
        if slopes.shape != intercepts.shape or slopes.size != knots.size + 1:
            raise ValidationError("piece count must equal knot count + 1")
        if knots.size and not np.all(np.diff(knots) > 0):
            raise ValidationError("knots must be strictly increasing")
        for i, k in enumerate(knots):
            left = slopes[i] * k + intercepts[i]
            right = slopes[i + 1] * k + intercepts[i + 1]
            if abs(left - right) > _CONTINUITY_RTOL * max(1.0, abs(left)):
                raise ValidationError(f"discontinuity at knot {k}: {left} vs {right}")

    @property
    def n_pieces(self) -> int:
        return self.slopes.size

    def piece_index(self, u: np.ndarray) -> np.ndarray:
        """Piece selected at each input value (value at a knot belongs to the right piece)."""
        return np.searchsorted(self.knots, u, side="right")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        p = self.piece_index(u)
        return self.slopes[p] * u + self.intercepts[p]


def relu() -> PiecewiseLinearActivation:
    return PiecewiseLinearActivation("relu", [0.0], [0.0, 1.0], [0.0, 0.0])


def leaky_relu(negative_slope: float = 0.01) -> PiecewiseLinearActivation:
    return PiecewiseLinearActivation(
        "leaky_relu", [0.0], [negative_slope, 1.0], [0.0, 0.0]
    )


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def approximate_activation(kind: str, cuts: int = 3) -> PiecewiseLinearActivation:
    """Piecewise-linear surrogate for a sigmoid or tanh activation.

    With cuts=3 the classic coarse approximation is returned: sigmoid is 0
    below -4, x/8 + 1/2 on [-4, 4] and 1 above; tanh is -1 below -2, x/2 on
    [-2, 2] and 1 above.  For odd cuts > 3 the middle pieces are chords of
    the true function at equally spaced knots over the same support, with
    the outer pieces held constant at the boundary values.
    """
    if cuts < 3 or cuts % 2 == 0:
        raise ValueError("cuts must be an odd integer >= 3")
    if kind == "sigmoid":
        support, fn = 4.0, _sigmoid
    elif kind == "tanh":
        support, fn = 2.0, np.tanh
    else:
        raise ValueError(f"unknown activation kind {kind!r}")

    if cuts == 3:
        if kind == "sigmoid":
            return PiecewiseLinearActivation(
                "sigmoid~3", [-4.0, 4.0], [0.0, 0.125, 0.0], [0.0, 0.5, 1.0]
            )
        return PiecewiseLinearActivation(
            "tanh~3", [-2.0, 2.0], [0.0, 0.5, 0.0], [-1.0, 0.0, 1.0]
        )

    knots = np.linspace(-support, support, cuts - 1)
    values = fn(knots)
    slopes = [0.0]
    intercepts = [values[0]]
    for i in range(len(knots) - 1):
        s = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i])
        slopes.append(s)
        intercepts.append(values[i] - s * knots[i])
    slopes.append(0.0)
    intercepts.append(values[-1])
    return PiecewiseLinearActivation(f"{kind}~{cuts}", knots, slopes, intercepts)


def exact_activation(kind: str):
    """The true smooth function, for comparison against its approximations."""
    if kind == "sigmoid":
        return _sigmoid
    if kind == "tanh":
        return np.tanh
    raise ValueError(f"unknown activation kind {kind!r}")
