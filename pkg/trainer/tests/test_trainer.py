import json

import numpy as np
import pytest
import torch

from seg_trainer import (
    TrainConfig,
    TrainingError,
    build_model,
    make_batch,
    object_indices,
    preactivation,
    predict_labels,
    train_and_export,
)
from seg_trainer.train import train_model


# ---------------------------------------------------------------------------
# config and data


def test_config_validation():
    with pytest.raises(TrainingError):
        TrainConfig(architecture="transformer")
    with pytest.raises(TrainingError):
        TrainConfig(architecture="cnn-4layer", n=15)
    with pytest.raises(TrainingError):
        TrainConfig(architecture="cnn-4layer", n=9)  # odd side
    with pytest.raises(TrainingError):
        TrainConfig(architecture="dense-8-16-8", n=64)
    with pytest.raises(TrainingError):
        TrainConfig(epochs=0)
    assert TrainConfig(architecture="dense-8-16-8", n=8).grid == (2, 4)
    assert TrainConfig(architecture="cnn-4layer", n=64).grid == (8, 8)


def test_object_geometry():
    obj = object_indices(8, 8)
    assert obj.size == 16
    rows, cols = np.divmod(obj, 8)
    assert rows.min() == 2 and rows.max() == 5
    obj_dense = object_indices(2, 4)
    assert sorted(obj_dense) == [0, 1, 4, 5]


def test_batch_composition():
    rng = np.random.default_rng(0)
    images, labels = make_batch(8, 8, 10, rng, delta=2.0, signal_fraction=0.5)
    assert images.shape == labels.shape == (10, 64)
    obj = object_indices(8, 8)
    assert np.all(labels[:5][:, obj] == 1.0)
    assert np.all(labels[5:] == 0.0)
    bg = np.setdiff1d(np.arange(64), obj)
    assert np.all(labels[:, bg] == 0.0)
    # signal images are brighter on the object by about delta
    assert images[:5][:, obj].mean() > images[5:][:, obj].mean() + 1.0


# ---------------------------------------------------------------------------
# training


def test_training_is_deterministic(tmp_path):
    cfg = TrainConfig(architecture="cnn-4layer", n=16, epochs=5, seed=3)
    m1 = train_and_export(cfg, tmp_path / "a").manifest
    m2 = train_and_export(cfg, tmp_path / "b").manifest
    doc1, doc2 = json.loads(m1.read_text()), json.loads(m2.read_text())
    assert doc1["layers"] == doc2["layers"]
    for entry in doc1["layers"]:
        for key in ("kernel", "weight", "bias"):
            if key in entry:
                rel = entry[key]["file"]
                assert (m1.parent / rel).read_bytes() == (m2.parent / rel).read_bytes()


def test_different_seeds_differ(tmp_path):
    out1 = train_and_export(
        TrainConfig(architecture="cnn-4layer", n=16, epochs=2, seed=0), tmp_path / "a"
    )
    out2 = train_and_export(
        TrainConfig(architecture="cnn-4layer", n=16, epochs=2, seed=1), tmp_path / "b"
    )
    b1 = (out1.manifest.parent / "layer00_kernel.bin").read_bytes()
    b2 = (out2.manifest.parent / "layer00_kernel.bin").read_bytes()
    assert b1 != b2


def test_divergence_raises():
    cfg = TrainConfig(architecture="cnn-4layer", n=16, epochs=40, learning_rate=1e200)
    with pytest.raises(TrainingError):
        train_model(cfg)


def test_cnn_heldout_accuracy(tmp_path):
    out = train_and_export(
        TrainConfig(architecture="cnn-4layer", n=64, epochs=40, seed=0), tmp_path
    )
    assert out.heldout_accuracy >= 0.9
    assert np.isfinite(out.final_loss)


def test_manifest_metadata(tmp_path):
    out = train_and_export(
        TrainConfig(architecture="dense-8-16-8", n=8, epochs=5, seed=2), tmp_path
    )
    doc = json.loads(out.manifest.read_text())
    assert doc["format"] == "si-seg-weights/1"
    meta = doc["metadata"]
    assert meta["architecture"] == "dense-8-16-8"
    assert meta["seed"] == 2
    assert "final_loss" in meta and "heldout_pixel_accuracy" in meta
    assert doc["layers"][1]["activation"]["name"] == "sigmoid"
    assert doc["layers"][-1] == {
        "kind": "output_sign", "threshold": 0.0, "source": "sigmoid"
    }


def test_model_label_rule():
    torch.manual_seed(0)
    cfg = TrainConfig(architecture="dense-8-16-8", n=8)
    model = build_model(cfg)
    images = np.random.default_rng(0).standard_normal((3, 8))
    u = preactivation(model, images, cfg.grid)
    labels = predict_labels(model, images, cfg.grid)
    assert np.array_equal(labels, (u >= 0).astype(np.uint8))


def test_cli_roundtrip(tmp_path, capsys):
    from seg_trainer.cli import main

    rc = main(["--arch", "cnn-4layer", "--n", "16", "--epochs", "2",
               "--seed", "5", "--out", str(tmp_path)])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert (tmp_path / "manifest.json").exists()
    assert 0.0 <= out["heldout_accuracy"] <= 1.0
