"""Torch models mirroring the inference engine's layer semantics.

Everything runs in float64 on CPU so exported weights reproduce the
engine's arithmetic to rounding error.  The output head is a sigmoid
trained through binary cross-entropy; only its pre-activation matters for
segmentation, so the exported manifest carries an output_sign layer with
source "sigmoid".
"""

import numpy as np
import torch
from torch import nn

from seg_trainer.config import TrainConfig


class CnnSegmenter(nn.Module):
    """conv(3,3,1,4) + ReLU, 2x2 max-pool, nearest 2x upsample, conv(3,3,4,1)."""

    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 4, 3, padding=1)
        self.conv2 = nn.Conv2d(4, 1, 3, padding=1)
        self.pool = nn.MaxPool2d(2)
        self.up = nn.Upsample(scale_factor=2, mode="nearest")

    def forward(self, x):  # x: (batch, 1, h, w) -> logits (batch, 1, h, w)
        h = torch.relu(self.conv1(x))
        h = self.up(self.pool(h))
        return self.conv2(h)


class DenseSegmenter(nn.Module):
    """8 -> 16 -> 8 fully connected net with a sigmoid hidden layer."""

    def __init__(self, n_in: int = 8, n_hidden: int = 16):
        super().__init__()
        self.fc1 = nn.Linear(n_in, n_hidden)
        self.fc2 = nn.Linear(n_hidden, n_in)

    def forward(self, x):  # x: (batch, n) -> logits (batch, n)
        return self.fc2(torch.sigmoid(self.fc1(x)))


def build_model(config: TrainConfig) -> nn.Module:
    if config.architecture == "cnn-4layer":
        model = CnnSegmenter()
    else:
        model = DenseSegmenter()
    return model.double()


def _as_input(model: nn.Module, images: np.ndarray, grid) -> torch.Tensor:
    x = torch.as_tensor(np.atleast_2d(images), dtype=torch.float64)
    if isinstance(model, CnnSegmenter):
        h, w = grid
        return x.reshape(-1, 1, h, w)
    return x


def preactivation(model: nn.Module, images: np.ndarray, grid) -> np.ndarray:
    """Output-layer pre-activation per pixel, (batch, n) float64."""
    with torch.no_grad():
        out = model(_as_input(model, images, grid))
    return out.reshape(out.shape[0], -1).numpy()


def predict_labels(model: nn.Module, images: np.ndarray, grid) -> np.ndarray:
    """Binary masks: sigmoid(u) >= 1/2, i.e. pre-activation >= 0."""
    return (preactivation(model, images, grid) >= 0.0).astype(np.uint8)
