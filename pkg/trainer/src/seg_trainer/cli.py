"""Command-line entry point: seg-train."""

import argparse
import json
import sys

from seg_trainer.config import TrainConfig
from seg_trainer.errors import TrainingError
from seg_trainer.train import train_and_export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seg-train",
        description="Train a small segmentation net and export si-seg-weights/1",
    )
    parser.add_argument("--arch", default="cnn-4layer",
                        choices=["cnn-4layer", "dense-8-16-8"])
    parser.add_argument("--n", type=int, default=64, help="pixel count (8 for dense)")
    parser.add_argument("--epochs", type=int, default=40)
    parser.add_argument("--lr", type=float, default=1e-2)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = TrainConfig(
            architecture=args.arch,
            n=args.n if args.arch == "cnn-4layer" else 8,
            epochs=args.epochs,
            learning_rate=args.lr,
            batch_size=args.batch,
            seed=args.seed,
        )
        outcome = train_and_export(config, args.out)
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({
        "manifest": str(outcome.manifest),
        "final_loss": outcome.final_loss,
        "heldout_accuracy": outcome.heldout_accuracy,
    }, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
