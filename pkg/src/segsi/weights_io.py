"""The "si-seg-weights/1" weight exchange format.

A manifest is a UTF-8 JSON document listing layers in order.  Every
parameter tensor lives in its own raw blob file next to the manifest:
little-endian float64, row-major, with the element count repeated in the
manifest for integrity checking.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from segsi.activations import (
    PiecewiseLinearActivation,
    approximate_activation,
    leaky_relu,
    relu,
)
from segsi.errors import FormatError, ValidationError
from segsi.network import (
    Activation,
    Conv2D,
    Dense,
    MaxPool2x2,
    NetworkSpec,
    OutputSign,
    UpsampleNearest2x,
)

FORMAT_VERSION = "si-seg-weights/1"

_SMOOTH_HIDDEN = {"sigmoid", "tanh"}


def _read_blob(base: Path, entry: dict, what: str) -> np.ndarray:
    try:
        rel = entry["file"]
        shape = tuple(int(s) for s in entry["shape"])
        count = int(entry["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{what}: malformed tensor entry: {exc}") from exc
    expected = int(np.prod(shape)) if shape else 1
    if count != expected:
        raise FormatError(f"{what}: count {count} does not match shape {shape}")
    path = base / rel
    if not path.is_file():
        raise FormatError(f"{what}: missing blob {path}")
    raw = path.read_bytes()
    if len(raw) != 8 * count:
        raise FormatError(f"{what}: blob {path} has {len(raw)} bytes, expected {8 * count}")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def _activation_from_entry(entry: dict, approximate_cuts: int | None, what: str):
    name = entry.get("name")
    if name == "relu":
        return relu()
    if name == "leaky_relu":
        return leaky_relu(float(entry.get("negative_slope", 0.01)))
    if name == "pwl":
        try:
            return PiecewiseLinearActivation(
                str(entry.get("label", "pwl")),
                entry["knots"],
                entry["slopes"],
                entry["intercepts"],
            )
        except KeyError as exc:
            raise FormatError(f"{what}: pwl activation missing {exc}") from exc
    if name in _SMOOTH_HIDDEN:
        if approximate_cuts is None:
            raise ValidationError(
                f"{what}: hidden '{name}' activation needs a piecewise-linear "
                "substitute; pass approximate_cuts"
            )
        return approximate_activation(name, approximate_cuts)
    raise FormatError(f"{what}: unknown activation {name!r}")


def load_network(manifest_path: str | Path, approximate_cuts: int | None = None) -> NetworkSpec:
    """Load a network from an exchange-format manifest.

    ``approximate_cuts`` substitutes a piecewise-linear approximation with
    that many pieces for any smooth hidden activation (sigmoid/tanh) named
    in the manifest.
    """
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read manifest {manifest_path}: {exc}") from exc
    if doc.get("format") != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format {doc.get('format')!r}; expected {FORMAT_VERSION!r}"
        )
    base = manifest_path.parent
    try:
        inp = doc["input"]
        height, width = int(inp["height"]), int(inp["width"])
        channels = int(inp.get("channels", 1))
        entries = doc["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed manifest: {exc}") from exc

    layers = []
    for i, entry in enumerate(entries):
        what = f"layer {i}"
        kind = entry.get("kind")
        if kind == "dense":
            layers.append(
                Dense(_read_blob(base, entry["weight"], what), _read_blob(base, entry["bias"], what))
            )
        elif kind == "conv2d":
            layers.append(
                Conv2D(_read_blob(base, entry["kernel"], what), _read_blob(base, entry["bias"], what))
            )
        elif kind == "maxpool2x2":
            layers.append(MaxPool2x2())
        elif kind == "upsample2x":
            layers.append(UpsampleNearest2x())
        elif kind == "activation":
            layers.append(
                Activation(_activation_from_entry(entry.get("activation", {}), approximate_cuts, what))
            )
        elif kind == "output_sign":
            layers.append(
                OutputSign(float(entry.get("threshold", 0.0)), str(entry.get("source", "sign")))
            )
        else:
            raise FormatError(f"{what}: unknown kind {kind!r}")
    return NetworkSpec(tuple(layers), height, width, channels)


def _write_blob(base: Path, name: str, arr: np.ndarray) -> dict:
    arr = np.asarray(arr, dtype=np.float64)
    rel = f"{name}.bin"
    (base / rel).write_bytes(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return {"file": rel, "shape": list(arr.shape), "count": int(arr.size)}


def save_network(net: NetworkSpec, out_dir: str | Path, metadata: dict | None = None) -> Path:
    """Write a network as an exchange-format manifest plus blobs; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, layer in enumerate(net.layers):
        if isinstance(layer, Dense):
            entries.append(
                {
                    "kind": "dense",
                    "weight": _write_blob(out_dir, f"layer{i:02d}_weight", layer.weight),
                    "bias": _write_blob(out_dir, f"layer{i:02d}_bias", layer.bias),
                }
            )
        elif isinstance(layer, Conv2D):
            entries.append(
                {
                    "kind": "conv2d",
                    "kernel": _write_blob(out_dir, f"layer{i:02d}_kernel", layer.kernel),
                    "bias": _write_blob(out_dir, f"layer{i:02d}_bias", layer.bias),
                }
            )
        elif isinstance(layer, MaxPool2x2):
            entries.append({"kind": "maxpool2x2"})
        elif isinstance(layer, UpsampleNearest2x):
            entries.append({"kind": "upsample2x"})
        elif isinstance(layer, Activation):
            fn = layer.fn
            if fn.name == "relu":
                act = {"name": "relu"}
            elif fn.name == "leaky_relu":
                act = {"name": "leaky_relu", "negative_slope": float(fn.slopes[0])}
            else:
                act = {
                    "name": "pwl",
                    "label": fn.name,
                    "knots": fn.knots.tolist(),
                    "slopes": fn.slopes.tolist(),
                    "intercepts": fn.intercepts.tolist(),
                }
            entries.append({"kind": "activation", "activation": act})
        elif isinstance(layer, OutputSign):
            entries.append(
                {"kind": "output_sign", "threshold": layer.threshold, "source": layer.source}
            )
    doc = {
        "format": FORMAT_VERSION,
        "input": {
            "height": net.input_height,
            "width": net.input_width,
            "channels": net.input_channels,
        },
        "layers": entries,
    }
    if metadata:
        doc["metadata"] = metadata
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return manifest
