"""Synthetic object/background training images.

Signal images carry a mean shift of delta on a fixed object region over
unit Gaussian noise; null images are pure noise with an all-background
label map.  For square grids the object is the centered square covering a
quarter of the pixels; for the 2x4 dense-net grid it is the left 2x2
block.
"""

import math

import numpy as np


def object_indices(height: int, width: int) -> np.ndarray:
    """Flat indices of the object region for a given grid."""
    if height == width:
        s = height // 2
        off = (height - s) // 2
        rows, cols = np.meshgrid(
            np.arange(off, off + s), np.arange(off, off + s), indexing="ij"
        )
        return (rows * width + cols).ravel()
    rows, cols = np.meshgrid(np.arange(height), np.arange(width // 2), indexing="ij")
    return (rows * width + cols).ravel()


def make_batch(
    height: int,
    width: int,
    count: int,
    rng: np.random.Generator,
    delta: float = 2.0,
    signal_fraction: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Images (count, n) and pixel labels (count, n), both float64."""
    n = height * width
    images = rng.standard_normal((count, n))
    labels = np.zeros((count, n))
    obj = object_indices(height, width)
    n_signal = math.floor(count * signal_fraction)
    images[:n_signal][:, obj] += delta
    labels[:n_signal][:, obj] = 1.0
    return images, labels
