"""Training side of the segmentation-inference toolchain.

Trains the 4-layer segmentation CNN and the 8-16-8 dense net on synthetic
object/background images and exports weights as "si-seg-weights/1"
manifests for the inference engine.
"""

from seg_trainer.config import TrainConfig
from seg_trainer.data import make_batch, object_indices
from seg_trainer.errors import TrainingError
from seg_trainer.models import build_model, predict_labels, preactivation
from seg_trainer.train import TrainOutcome, train_and_export

__all__ = [
    "TrainConfig",
    "TrainingError",
    "TrainOutcome",
    "build_model",
    "make_batch",
    "object_indices",
    "preactivation",
    "predict_labels",
    "train_and_export",
]
