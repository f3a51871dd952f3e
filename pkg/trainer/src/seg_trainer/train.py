"""Training loop and exchange-format export."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from seg_trainer.config import TrainConfig
from seg_trainer.data import make_batch
from seg_trainer.errors import TrainingError
from seg_trainer.export import export_cnn, export_dense
from seg_trainer.models import CnnSegmenter, build_model, predict_labels

TRAIN_IMAGES = 256
HELDOUT_IMAGES = 64


@dataclass(frozen=True)
class TrainOutcome:
    manifest: Path
    final_loss: float
    heldout_accuracy: float


def _heldout_accuracy(model, config: TrainConfig, rng: np.random.Generator) -> float:
    images, labels = make_batch(*config.grid, HELDOUT_IMAGES, rng)
    pred = predict_labels(model, images, config.grid)
    return float(np.mean(pred == labels))


def train_model(config: TrainConfig) -> tuple[nn.Module, float]:
    """Fit the configured model on synthetic images; returns (model, loss)."""
    torch.manual_seed(config.seed)
    model = build_model(config)
    rng = np.random.default_rng(config.seed)
    images, labels = make_batch(*config.grid, TRAIN_IMAGES, rng)
    x = torch.as_tensor(images, dtype=torch.float64)
    y = torch.as_tensor(labels, dtype=torch.float64)
    if isinstance(model, CnnSegmenter):
        h, w = config.grid
        x = x.reshape(-1, 1, h, w)
        y = y.reshape(-1, 1, h, w)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()
    order = torch.randperm(TRAIN_IMAGES)  # fixed by the manual seed
    loss_val = float("nan")
    for _ in range(config.epochs):
        for start in range(0, TRAIN_IMAGES, config.batch_size):
            sel = order[start : start + config.batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(x[sel]), y[sel])
            loss_val = float(loss.detach())
            if not np.isfinite(loss_val):
                raise TrainingError(f"training diverged: loss {loss_val}")
            loss.backward()
            optimizer.step()
    for p in model.parameters():
        if not torch.all(torch.isfinite(p)):
            raise TrainingError("training diverged: non-finite parameters")
    return model, loss_val


def train_and_export(config: TrainConfig, out_dir: str | Path) -> TrainOutcome:
    """Train per config and write a "si-seg-weights/1" manifest to out_dir."""
    model, loss_val = train_model(config)
    accuracy = _heldout_accuracy(model, config, np.random.default_rng([config.seed, 1]))
    metadata = {
        "architecture": config.architecture,
        "n": config.n,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "seed": config.seed,
        "final_loss": loss_val,
        "heldout_pixel_accuracy": accuracy,
    }
    if config.architecture == "cnn-4layer":
        manifest = export_cnn(model, config.grid, out_dir, metadata)
    else:
        manifest = export_dense(model, config.grid, out_dir, metadata)
    return TrainOutcome(manifest=manifest, final_loss=loss_val, heldout_accuracy=accuracy)
