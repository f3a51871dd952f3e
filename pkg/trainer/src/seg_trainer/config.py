import math
from dataclasses import dataclass

from seg_trainer.errors import TrainingError

ARCHITECTURES = ("cnn-4layer", "dense-8-16-8")

DENSE_INPUT_SIZE = 8


@dataclass(frozen=True)
class TrainConfig:
    architecture: str = "cnn-4layer"
    n: int = 64
    epochs: int = 40
    learning_rate: float = 1e-2
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise TrainingError(f"unknown architecture {self.architecture!r}")
        if self.architecture == "dense-8-16-8":
            if self.n != DENSE_INPUT_SIZE:
                raise TrainingError("dense-8-16-8 takes exactly 8 input pixels")
        else:
            side = math.isqrt(self.n)
            if side * side != self.n or side % 2:
                raise TrainingError(
                    f"n={self.n} must be a perfect square with an even side"
                )
        if self.epochs < 1 or self.batch_size < 1 or not self.learning_rate > 0:
            raise TrainingError("epochs, batch size and learning rate must be positive")

    @property
    def grid(self) -> tuple[int, int]:
        if self.architecture == "dense-8-16-8":
            return 2, 4
        side = math.isqrt(self.n)
        return side, side
