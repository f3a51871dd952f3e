"""Flat image vectors with grid metadata, plus the image file formats."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from segsi.errors import FormatError, ValidationError

_MAGIC = b"SIIMG1"


@dataclass(frozen=True)
class ImageVector:
    """An n-pixel image stored as a flat real vector (row-major grid)."""

    values: np.ndarray
    height: int
    width: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        object.__setattr__(self, "values", values)
        if self.height <= 0 or self.width <= 0:
            raise ValidationError("height and width must be positive")
        n = self.height * self.width
        if values.size != n:
            raise ValidationError(
                f"got {values.size} values for a {self.height}x{self.width} grid"
            )
        if n < 4:
            raise ValidationError("images must have at least 4 pixels")
        if not np.all(np.isfinite(values)):
            raise ValidationError("image values must be finite")

    @property
    def n(self) -> int:
        return self.values.size

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.height, self.width)


def read_image(path: str | Path) -> ImageVector:
    """Read an image from a SIIMG1 binary file or a plain CSV grid."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        grid = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))
        return ImageVector(grid.ravel(), grid.shape[0], grid.shape[1])
    raw = path.read_bytes()
    if len(raw) < len(_MAGIC) + 8 or raw[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path}: not a SIIMG1 file")
    height, width = struct.unpack("<II", raw[len(_MAGIC) : len(_MAGIC) + 8])
    body = raw[len(_MAGIC) + 8 :]
    n = height * width
    if len(body) != 8 * n:
        raise FormatError(f"{path}: expected {8 * n} payload bytes, got {len(body)}")
    values = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return ImageVector(values, height, width)


def write_image(image: ImageVector, path: str | Path) -> None:
    """Write an image in the format implied by the path suffix."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        np.savetxt(path, image.grid(), delimiter=",")
        return
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", image.height, image.width))
        fh.write(np.ascontiguousarray(image.values, dtype="<f8").tobytes())
