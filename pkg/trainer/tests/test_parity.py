"""Cross-implementation parity: trained weights through the inference engine.

The exported manifest is the only interface between the two packages; the
engine loads it with segsi.load_network and must reproduce the trainer's
masks and pre-activations.
"""

import numpy as np
import pytest

from segsi import forward, load_network, output_preactivation, save_network
from segsi.hypothesis import NoiseModel
from segsi.inference import selective_p_pipeline

from seg_trainer import TrainConfig, make_batch, preactivation, predict_labels
from seg_trainer.train import train_model
from seg_trainer.export import export_cnn, export_dense


@pytest.fixture(scope="module")
def trained_cnn(tmp_path_factory):
    cfg = TrainConfig(architecture="cnn-4layer", n=64, epochs=40, seed=0)
    model, _ = train_model(cfg)
    out = tmp_path_factory.mktemp("cnn")
    manifest = export_cnn(model, cfg.grid, out)
    return cfg, model, manifest


@pytest.fixture(scope="module")
def trained_dense(tmp_path_factory):
    cfg = TrainConfig(architecture="dense-8-16-8", n=8, epochs=60, seed=0)
    model, _ = train_model(cfg)
    out = tmp_path_factory.mktemp("dense")
    manifest = export_dense(model, cfg.grid, out)
    return cfg, model, manifest


def test_cnn_mask_parity_on_50_images(trained_cnn):
    cfg, model, manifest = trained_cnn
    net = load_network(manifest)
    rng = np.random.default_rng(42)
    images, _ = make_batch(*cfg.grid, 50, rng)
    torch_masks = predict_labels(model, images, cfg.grid)
    for img, want in zip(images, torch_masks):
        assert np.array_equal(forward(net, img).labels, want)


def test_cnn_preactivation_parity(trained_cnn):
    cfg, model, manifest = trained_cnn
    net = load_network(manifest)
    rng = np.random.default_rng(7)
    images, _ = make_batch(*cfg.grid, 20, rng)
    torch_pre = preactivation(model, images, cfg.grid)
    worst = max(
        float(np.max(np.abs(output_preactivation(net, img) - want)))
        for img, want in zip(images, torch_pre)
    )
    assert worst <= 1e-5


def test_cnn_reexport_byte_identical(trained_cnn):
    _, _, manifest = trained_cnn
    net = load_network(manifest)
    m2 = save_network(net, manifest.parent.parent / "reexport")
    for blob in sorted(p.name for p in manifest.parent.glob("*.bin")):
        assert (manifest.parent / blob).read_bytes() == (m2.parent / blob).read_bytes()


def test_trained_net_runs_selective_inference(trained_cnn):
    cfg, _, manifest = trained_cnn
    net = load_network(manifest)
    rng = np.random.default_rng(3)
    res = selective_p_pipeline(net, rng.standard_normal(cfg.n), NoiseModel.isotropic(1.0))
    if res.detected:
        assert 0.0 <= res.p_selective <= 1.0


def test_dense_requires_approximation(trained_dense):
    from segsi.errors import ValidationError

    _, _, manifest = trained_dense
    with pytest.raises(ValidationError):
        load_network(manifest)


def test_dense_mask_parity_with_fine_approximation(trained_dense):
    # with enough pieces the approximation matches the true sigmoid closely
    # enough that masks agree on most draws; count the agreements
    cfg, model, manifest = trained_dense
    net = load_network(manifest, approximate_cuts=31)
    rng = np.random.default_rng(11)
    images, _ = make_batch(*cfg.grid, 50, rng)
    torch_masks = predict_labels(model, images, cfg.grid)
    agree = sum(
        np.array_equal(forward(net, img).labels, want)
        for img, want in zip(images, torch_masks)
    )
    assert agree >= 45


def test_dense_pipeline_with_3cut_approximation(trained_dense):
    cfg, _, manifest = trained_dense
    net = load_network(manifest, approximate_cuts=3)
    rng = np.random.default_rng(5)
    res = selective_p_pipeline(net, rng.standard_normal(cfg.n), NoiseModel.isotropic(1.0))
    if res.detected:
        assert 0.0 <= res.p_selective <= 1.0
        assert res.truncation.contains(res.z_obs, atol=1e-9)
