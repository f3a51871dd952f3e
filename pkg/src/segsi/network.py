"""Inference engine for networks of affine ops and piecewise-linear activations.

Two evaluation modes share the same layer semantics:

* ``forward`` evaluates the network on a concrete image and returns the
  per-pixel segmentation mask (final pre-activation >= threshold => object).
* ``forward_line`` pushes the whole line x(z) = a + b*z through the network
  as per-unit affine pairs (value-at-zero, slope) and, at a query point z,
  records one linear inequality per piece selection: activation-knot
  inequalities, max-pool dominance inequalities and output-sign
  inequalities.  Every recorded constraint reads "intercept + slope*z <= 0"
  and is satisfied at the query point.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from segsi.activations import PiecewiseLinearActivation
from segsi.errors import NumericError, ValidationError
from segsi.images import ImageVector


@dataclass(frozen=True, eq=False)
class SegmentationMask:
    """Binary per-pixel labels: 1 = object, 0 = background."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.uint8).ravel()
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def object_pixels(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 1)

    @property
    def background_pixels(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 0)

    @property
    def is_trivial(self) -> bool:
        """True when one of the two regions is empty."""
        first = self.labels[0]
        return bool(np.all(self.labels == first))

    def __eq__(self, other):
        if not isinstance(other, SegmentationMask):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())


# ---------------------------------------------------------------------------
# Layer specs


@dataclass(frozen=True)
class Dense:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray    # (out,)

    def __post_init__(self):
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=np.float64))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=np.float64))
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValidationError("dense weight must be (out, in) with matching bias")


@dataclass(frozen=True)
class Conv2D:
    """Zero-padded 'same' convolution, stride 1, odd kernel size."""

    kernel: np.ndarray  # (kh, kw, cin, cout)
    bias: np.ndarray    # (cout,)

    def __post_init__(self):
        object.__setattr__(self, "kernel", np.asarray(self.kernel, dtype=np.float64))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=np.float64))
        if self.kernel.ndim != 4:
            raise ValidationError("conv kernel must be (kh, kw, cin, cout)")
        kh, kw, _, cout = self.kernel.shape
        if kh % 2 == 0 or kw % 2 == 0:
            raise ValidationError("conv kernel sides must be odd for 'same' padding")
        if self.bias.shape != (cout,):
            raise ValidationError("conv bias must match the output channel count")


@dataclass(frozen=True)
class MaxPool2x2:
    """2x2 max pooling, stride 2."""


@dataclass(frozen=True)
class UpsampleNearest2x:
    """Nearest-neighbour 2x upsampling."""


@dataclass(frozen=True)
class Activation:
    fn: PiecewiseLinearActivation


@dataclass(frozen=True)
class OutputSign:
    """Final labelling layer: label 1 iff pre-activation >= threshold.

    For a sigmoid (or tanh) output head, thresholding the pre-activation at
    zero is equivalent to thresholding the activation at 1/2 (resp. 0), so
    no approximation of the output nonlinearity is ever needed.
    """

    threshold: float = 0.0
    source: str = "sign"  # informational: "sign", "sigmoid", "tanh"


LayerSpec = Dense | Conv2D | MaxPool2x2 | UpsampleNearest2x | Activation | OutputSign


def _layer_params(layer) -> list[np.ndarray]:
    if isinstance(layer, Dense):
        return [layer.weight, layer.bias]
    if isinstance(layer, Conv2D):
        return [layer.kernel, layer.bias]
    return []


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer list with fixed input grid; immutable after construction."""

    layers: tuple
    input_height: int
    input_width: int
    input_channels: int = 1

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        self._validate()

    @property
    def n_pixels(self) -> int:
        return self.input_height * self.input_width

    @property
    def input_size(self) -> int:
        return self.n_pixels * self.input_channels

    def _validate(self):
        if not self.layers:
            raise ValidationError("network needs at least one layer")
        if not isinstance(self.layers[-1], OutputSign):
            raise ValidationError("final layer must be OutputSign")
        for i, layer in enumerate(self.layers):
            for p in _layer_params(layer):
                if not np.all(np.isfinite(p)):
                    raise ValidationError(f"layer {i}: non-finite parameters")
            if isinstance(layer, OutputSign) and i != len(self.layers) - 1:
                raise ValidationError(f"layer {i}: OutputSign must be last")
        # Shape composition: spatial shapes are (h, w, c); Dense flattens.
        shape = ("spatial", self.input_height, self.input_width, self.input_channels)
        for i, layer in enumerate(self.layers):
            shape = self._propagate_shape(i, layer, shape)
        total = shape[1] * shape[2] * shape[3] if shape[0] == "spatial" else shape[1]
        if total != self.n_pixels:
            raise ValidationError(
                f"network emits {total} labels for {self.n_pixels} pixels"
            )

    def _propagate_shape(self, i, layer, shape):
        kind = shape[0]
        total = shape[1] * shape[2] * shape[3] if kind == "spatial" else shape[1]
        if isinstance(layer, Dense):
            if layer.weight.shape[1] != total:
                raise ValidationError(
                    f"layer {i}: dense expects {layer.weight.shape[1]} inputs, got {total}"
                )
            return ("flat", layer.weight.shape[0])
        if isinstance(layer, Conv2D):
            if kind != "spatial":
                raise ValidationError(f"layer {i}: conv needs a spatial input")
            _, h, w, c = shape
            if layer.kernel.shape[2] != c:
                raise ValidationError(
                    f"layer {i}: conv expects {layer.kernel.shape[2]} channels, got {c}"
                )
            return ("spatial", h, w, layer.kernel.shape[3])
        if isinstance(layer, MaxPool2x2):
            if kind != "spatial":
                raise ValidationError(f"layer {i}: pooling needs a spatial input")
            _, h, w, c = shape
            if h % 2 or w % 2:
                raise ValidationError(f"layer {i}: pooling needs even sides, got {h}x{w}")
            return ("spatial", h // 2, w // 2, c)
        if isinstance(layer, UpsampleNearest2x):
            if kind != "spatial":
                raise ValidationError(f"layer {i}: upsampling needs a spatial input")
            _, h, w, c = shape
            return ("spatial", 2 * h, 2 * w, c)
        if isinstance(layer, (Activation, OutputSign)):
            return shape
        raise ValidationError(f"layer {i}: unknown layer type {type(layer).__name__}")


# ---------------------------------------------------------------------------
# Constraints


@dataclass(frozen=True)
class AffineUnitConstraint:
    """One linear inequality in z: intercept + slope*z <= 0."""

    layer: int
    unit: int
    intercept: float  # value of the constraint's affine part at z = 0
    slope: float
    piece: int


class ConstraintSet:
    """All piece-selection inequalities collected along one forward_line pass.

    ``intercepts`` and ``slopes`` are parallel arrays; the signature is the
    tuple of per-layer selected-piece arrays (activation pieces, max-pool
    winners, output labels).
    """

    __slots__ = ("intercepts", "slopes", "layers", "units", "pieces", "signature")

    def __init__(self, intercepts, slopes, layers, units, pieces, signature):
        self.intercepts = intercepts
        self.slopes = slopes
        self.layers = layers
        self.units = units
        self.pieces = pieces
        self.signature = signature

    def __len__(self) -> int:
        return self.intercepts.size

    def __iter__(self):
        for i in range(len(self)):
            yield AffineUnitConstraint(
                int(self.layers[i]),
                int(self.units[i]),
                float(self.intercepts[i]),
                float(self.slopes[i]),
                int(self.pieces[i]),
            )

    def signature_hash(self) -> int:
        h = hashlib.blake2b(digest_size=8)
        for arr in self.signature:
            h.update(arr.tobytes())
        return int.from_bytes(h.digest(), "little")

    def same_signature(self, other: "ConstraintSet") -> bool:
        return len(self.signature) == len(other.signature) and all(
            np.array_equal(a, b) for a, b in zip(self.signature, other.signature)
        )


class _Collector:
    __slots__ = ("intercepts", "slopes", "layers", "units", "pieces", "signature")

    def __init__(self):
        self.intercepts = []
        self.slopes = []
        self.layers = []
        self.units = []
        self.pieces = []
        self.signature = []

    def add(self, layer_idx, units, intercepts, slopes, pieces):
        m = units.size
        if m == 0:
            return
        self.intercepts.append(np.asarray(intercepts, dtype=np.float64))
        self.slopes.append(np.asarray(slopes, dtype=np.float64))
        self.layers.append(np.full(m, layer_idx, dtype=np.int32))
        self.units.append(np.asarray(units, dtype=np.int32))
        self.pieces.append(np.asarray(pieces, dtype=np.int32))

    def finish(self) -> ConstraintSet:
        if self.intercepts:
            intercepts = np.concatenate(self.intercepts)
            slopes = np.concatenate(self.slopes)
            layers = np.concatenate(self.layers)
            units = np.concatenate(self.units)
            pieces = np.concatenate(self.pieces)
        else:
            intercepts = np.empty(0)
            slopes = np.empty(0)
            layers = np.empty(0, dtype=np.int32)
            units = np.empty(0, dtype=np.int32)
            pieces = np.empty(0, dtype=np.int32)
        return ConstraintSet(intercepts, slopes, layers, units, pieces, self.signature)


# ---------------------------------------------------------------------------
# Plain forward evaluation


def _conv_same(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """'Same' zero-padded stride-1 convolution; x is (..., h, w, cin)."""
    kh, kw, _, _ = kernel.shape
    ph, pw = kh // 2, kw // 2
    h, w = x.shape[-3], x.shape[-2]
    pad = [(0, 0)] * (x.ndim - 3) + [(ph, ph), (pw, pw), (0, 0)]
    xp = np.pad(x, pad)
    out = None
    for di in range(kh):
        for dj in range(kw):
            term = xp[..., di : di + h, dj : dj + w, :] @ kernel[di, dj]
            out = term if out is None else out + term
    return out


def _pool_windows(x: np.ndarray) -> np.ndarray:
    """Reshape (..., h, w, c) into (..., h/2, w/2, 4, c), window row-major."""
    h, w, c = x.shape[-3], x.shape[-2], x.shape[-1]
    lead = x.shape[:-3]
    v = x.reshape(lead + (h // 2, 2, w // 2, 2, c))
    v = np.moveaxis(v, -4, -3)  # (..., h/2, w/2, 2, 2, c)
    return v.reshape(lead + (h // 2, w // 2, 4, c))


def _upsample(x: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(x, 2, axis=-3), 2, axis=-2)


def output_preactivation(net: NetworkSpec, x: ImageVector | np.ndarray) -> np.ndarray:
    """Per-pixel pre-activation feeding the final labelling layer."""
    values = x.values if isinstance(x, ImageVector) else np.asarray(x, dtype=np.float64)
    if values.size != net.input_size:
        raise ValidationError(
            f"image has {values.size} values, network expects {net.input_size}"
        )
    arr = values.reshape(net.input_height, net.input_width, net.input_channels)
    for i, layer in enumerate(net.layers[:-1]):
        if isinstance(layer, Dense):
            arr = layer.weight @ arr.ravel() + layer.bias
        elif isinstance(layer, Conv2D):
            arr = _conv_same(arr, layer.kernel) + layer.bias
        elif isinstance(layer, MaxPool2x2):
            arr = np.max(_pool_windows(arr), axis=-2)
        elif isinstance(layer, UpsampleNearest2x):
            arr = _upsample(arr)
        elif isinstance(layer, Activation):
            arr = layer.fn(arr)
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values after layer {i}")
    return np.asarray(arr, dtype=np.float64).ravel()


def forward(net: NetworkSpec, x: ImageVector | np.ndarray) -> SegmentationMask:
    """Apply the network to an image and return the segmentation mask."""
    u = output_preactivation(net, x)
    threshold = net.layers[-1].threshold
    return SegmentationMask((u >= threshold).astype(np.uint8))


# ---------------------------------------------------------------------------
# Affine propagation along x(z) = a + b*z


def forward_line(
    net: NetworkSpec, a: np.ndarray, b: np.ndarray, z: float
) -> tuple[SegmentationMask, ConstraintSet]:
    """Evaluate the network along the line at z, recording piece constraints.

    The returned mask equals ``forward(net, a + b*z)``; the returned
    constraint set pins the selected piece of every nonlinearity, so the
    mask and all intermediate affine maps stay fixed while every
    "intercept + slope*z' <= 0" inequality holds.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != net.input_size or b.size != net.input_size:
        raise ValidationError("line vectors must match the network input size")
    shape = (net.input_height, net.input_width, net.input_channels)
    # arr[0] holds the value at z=0 (intercept field), arr[1] the slope field.
    arr = np.stack([a.reshape(shape), b.reshape(shape)])
    collector = _Collector()
    labels = None
    for i, layer in enumerate(net.layers):
        if isinstance(layer, Dense):
            flat = arr.reshape(2, -1)
            arr = flat @ layer.weight.T
            arr[0] += layer.bias
        elif isinstance(layer, Conv2D):
            arr = _conv_same(arr, layer.kernel)
            arr[0] += layer.bias
        elif isinstance(layer, MaxPool2x2):
            arr = _maxpool_line(arr, z, i, collector)
        elif isinstance(layer, UpsampleNearest2x):
            arr = _upsample(arr)
        elif isinstance(layer, Activation):
            arr = _activation_line(arr, layer.fn, z, i, collector)
        elif isinstance(layer, OutputSign):
            labels = _output_sign_line(arr, layer.threshold, z, i, collector)
        if labels is None and not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite affine coefficients after layer {i}")
    return SegmentationMask(labels), collector.finish()


def _activation_line(arr, fn, z, layer_idx, collector):
    lead_shape = arr.shape[1:]
    alpha = arr[0].ravel()
    beta = arr[1].ravel()
    u = alpha + beta * z
    p = fn.piece_index(u)
    knots = fn.knots
    k = knots.size
    m = alpha.size
    idx = np.arange(m, dtype=np.int32)
    # u >= left knot  <=>  knot - alpha - beta*z <= 0
    has_left = p > 0
    # u <= right knot  <=>  alpha - knot + beta*z <= 0
    has_right = p < k
    left = np.flatnonzero(has_left)
    right = np.flatnonzero(has_right)
    collector.add(
        layer_idx,
        idx[left],
        knots[p[left] - 1] - alpha[left],
        -beta[left],
        p[left],
    )
    collector.add(
        layer_idx,
        idx[right],
        alpha[right] - knots[p[right]],
        beta[right],
        p[right],
    )
    collector.signature.append(p.astype(np.int32))
    out = np.empty_like(arr)
    out[0] = (fn.slopes[p] * alpha + fn.intercepts[p]).reshape(lead_shape)
    out[1] = (fn.slopes[p] * beta).reshape(lead_shape)
    return out


def _maxpool_line(arr, z, layer_idx, collector):
    win = _pool_windows(arr)  # (2, h2, w2, 4, c)
    values = win[0] + win[1] * z
    # argmax returns the first maximum, i.e. the smallest row-major window slot
    winner = np.argmax(values, axis=-2)  # (h2, w2, c)
    w_exp = winner[None, ..., None, :]
    chosen = np.take_along_axis(win, np.broadcast_to(w_exp, win.shape[:-2] + (1,) + win.shape[-1:]), axis=-2)
    out = chosen[..., 0, :]
    # dominance: loser value <= winner value at every slot but the winner's
    alpha_w = out[0]
    beta_w = out[1]
    diff_alpha = win[0] - alpha_w[..., None, :]
    diff_beta = win[1] - beta_w[..., None, :]
    h2, w2, _, c = values.shape
    slots = np.arange(4)[None, None, :, None]
    loser = slots != winner[:, :, None, :]
    unit = np.broadcast_to(
        (np.arange(h2 * w2 * c).reshape(h2, w2, c))[:, :, None, :], loser.shape
    )
    piece = np.broadcast_to(winner[:, :, None, :], loser.shape)
    sel = loser
    collector.add(
        layer_idx,
        unit[sel].astype(np.int32),
        diff_alpha[sel],
        diff_beta[sel],
        piece[sel],
    )
    collector.signature.append(winner.ravel().astype(np.int32))
    return out


def _output_sign_line(arr, threshold, z, layer_idx, collector):
    alpha = arr[0].ravel()
    beta = arr[1].ravel()
    u = alpha + beta * z
    labels = (u >= threshold).astype(np.uint8)
    obj = labels == 1
    m = alpha.size
    idx = np.arange(m, dtype=np.int32)
    # object pixel:     threshold - alpha - beta*z <= 0
    # background pixel: alpha - threshold + beta*z <= 0
    intercepts = np.where(obj, threshold - alpha, alpha - threshold)
    slopes = np.where(obj, -beta, beta)
    collector.add(layer_idx, idx, intercepts, slopes, labels.astype(np.int32))
    collector.signature.append(labels.astype(np.int32))
    return labels
