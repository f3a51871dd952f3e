"""Writer for the "si-seg-weights/1" exchange format.

Implemented against the format contract only: a JSON manifest listing
layers in order, one raw little-endian float64 row-major blob per
parameter tensor, with element counts repeated in the manifest.
"""

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = "si-seg-weights/1"


def _blob(out_dir: Path, name: str, arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    rel = f"{name}.bin"
    (out_dir / rel).write_bytes(arr.tobytes())
    return {"file": rel, "shape": list(arr.shape), "count": int(arr.size)}


def export_cnn(model, grid, out_dir, metadata=None) -> Path:
    """Manifest for the 4-layer CNN; torch kernels become (kh, kw, cin, cout)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    k1 = model.conv1.weight.detach().numpy().transpose(2, 3, 1, 0)
    k2 = model.conv2.weight.detach().numpy().transpose(2, 3, 1, 0)
    layers = [
        {
            "kind": "conv2d",
            "kernel": _blob(out_dir, "layer00_kernel", k1),
            "bias": _blob(out_dir, "layer00_bias", model.conv1.bias.detach().numpy()),
        },
        {"kind": "activation", "activation": {"name": "relu"}},
        {"kind": "maxpool2x2"},
        {"kind": "upsample2x"},
        {
            "kind": "conv2d",
            "kernel": _blob(out_dir, "layer04_kernel", k2),
            "bias": _blob(out_dir, "layer04_bias", model.conv2.bias.detach().numpy()),
        },
        {"kind": "output_sign", "threshold": 0.0, "source": "sigmoid"},
    ]
    return _write_manifest(out_dir, grid, layers, metadata)


def export_dense(model, grid, out_dir, metadata=None) -> Path:
    """Manifest for the 8-16-8 net; the hidden sigmoid keeps its exact name."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    layers = [
        {
            "kind": "dense",
            "weight": _blob(out_dir, "layer00_weight", model.fc1.weight.detach().numpy()),
            "bias": _blob(out_dir, "layer00_bias", model.fc1.bias.detach().numpy()),
        },
        {"kind": "activation", "activation": {"name": "sigmoid"}},
        {
            "kind": "dense",
            "weight": _blob(out_dir, "layer02_weight", model.fc2.weight.detach().numpy()),
            "bias": _blob(out_dir, "layer02_bias", model.fc2.bias.detach().numpy()),
        },
        {"kind": "output_sign", "threshold": 0.0, "source": "sigmoid"},
    ]
    return _write_manifest(out_dir, grid, layers, metadata)


def _write_manifest(out_dir: Path, grid, layers, metadata) -> Path:
    height, width = grid
    doc = {
        "format": FORMAT_VERSION,
        "input": {"height": height, "width": width, "channels": 1},
        "layers": layers,
    }
    if metadata:
        doc["metadata"] = metadata
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return manifest
