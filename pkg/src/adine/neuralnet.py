"""Minimal feedforward network with manual backpropagation, exposing its
mini-batched training loss through the shared objective interface.

Supports the two protocol shapes used by the experiments: a softmax classifier
trained with cross-entropy, and a sigmoid-output autoencoder trained with
binary cross-entropy (mean over batch and output units). Weight decay is an
L2 term added to the loss and its gradient (weights only, never biases), so
it flows through lookahead gradients like any other loss term.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .core import DivergedError, Objective, ParamVector, Rng

BCE_CLAMP = 1e-12

# Spawn key for the mini-batch shuffle stream; distinct from the keys the
# harness uses for data generation and weight init.
_SHUFFLE_KEY = 3


class Activation(Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    SOFTMAX = "softmax"
    IDENTITY = "identity"


class LossKind(Enum):
    CROSS_ENTROPY = "cross_entropy"
    BINARY_CROSS_ENTROPY = "binary_cross_entropy"


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: Activation

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dims must be positive, got {self.in_dim}x{self.out_dim}")

    @property
    def n_params(self) -> int:
        return self.in_dim * self.out_dim + self.out_dim


class Network:
    """Layer chain plus flattened parameters (layer-major: W then b per layer)."""

    def __init__(
        self,
        layers: Sequence[LayerSpec],
        loss_kind: LossKind,
        weight_decay: float = 0.0,
        params: Optional[ParamVector] = None,
    ):
        layers = tuple(layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")
        for spec in layers[:-1]:
            if spec.activation is Activation.SOFTMAX:
                raise ValueError("softmax is only permitted on the final layer")
        if loss_kind is LossKind.CROSS_ENTROPY and layers[-1].activation is not Activation.SOFTMAX:
            raise ValueError("cross-entropy requires a softmax output layer")
        if (
            loss_kind is LossKind.BINARY_CROSS_ENTROPY
            and layers[-1].activation is not Activation.SIGMOID
        ):
            raise ValueError("binary cross-entropy requires a sigmoid output layer")
        if weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {weight_decay}")
        self.layers = layers
        self.loss_kind = loss_kind
        self.weight_decay = float(weight_decay)
        self.n_params = sum(spec.n_params for spec in layers)
        if params is not None and params.dim != self.n_params:
            raise ValueError(f"params has dim {params.dim}, network needs {self.n_params}")
        self.params = params

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def with_params(self, params: ParamVector) -> "Network":
        return Network(self.layers, self.loss_kind, self.weight_decay, params)

    def unflatten(self, params: ParamVector):
        """Per-layer (W, b) views into the flat parameter array."""
        if params.dim != self.n_params:
            raise ValueError(f"params has dim {params.dim}, network needs {self.n_params}")
        out = []
        off = 0
        vals = params.values
        for spec in self.layers:
            w = vals[off : off + spec.in_dim * spec.out_dim].reshape(spec.in_dim, spec.out_dim)
            off += spec.in_dim * spec.out_dim
            b = vals[off : off + spec.out_dim]
            off += spec.out_dim
            out.append((w, b))
        return out


def build_classifier(dims: Sequence[int], weight_decay: float = 0.0) -> Network:
    """ReLU hidden layers, softmax output, cross-entropy loss."""
    if len(dims) < 2:
        raise ValueError("need at least input and output dims")
    layers = [
        LayerSpec(dims[i], dims[i + 1], Activation.RELU) for i in range(len(dims) - 2)
    ]
    layers.append(LayerSpec(dims[-2], dims[-1], Activation.SOFTMAX))
    return Network(layers, LossKind.CROSS_ENTROPY, weight_decay)


def build_autoencoder(
    encoder_dims: Sequence[int], decoder_dims: Sequence[int], weight_decay: float = 0.0
) -> Network:
    """Sigmoid hidden layers, no activation at the bottleneck (between encoder
    and decoder), sigmoid output feeding binary cross-entropy."""
    if len(encoder_dims) < 2 or len(decoder_dims) < 2:
        raise ValueError("encoder and decoder each need at least two dims")
    if encoder_dims[-1] != decoder_dims[0]:
        raise ValueError("decoder must start at the encoder's bottleneck width")
    if decoder_dims[-1] != encoder_dims[0]:
        raise ValueError("autoencoder output width must match its input width")
    layers = []
    for i in range(len(encoder_dims) - 2):
        layers.append(LayerSpec(encoder_dims[i], encoder_dims[i + 1], Activation.SIGMOID))
    layers.append(LayerSpec(encoder_dims[-2], encoder_dims[-1], Activation.IDENTITY))
    for i in range(len(decoder_dims) - 2):
        layers.append(LayerSpec(decoder_dims[i], decoder_dims[i + 1], Activation.SIGMOID))
    layers.append(LayerSpec(decoder_dims[-2], decoder_dims[-1], Activation.SIGMOID))
    return Network(layers, LossKind.BINARY_CROSS_ENTROPY, weight_decay)


def glorot_init(layers: Sequence[LayerSpec], rng: Rng) -> ParamVector:
    """Uniform weight draws bounded by sqrt(6/(fan_in+fan_out)); zero biases."""
    parts = []
    for spec in layers:
        bound = math.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        parts.append(rng.uniform(-bound, bound, (spec.in_dim, spec.out_dim)).ravel())
        parts.append(np.zeros(spec.out_dim))
    return ParamVector._wrap(np.concatenate(parts))


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, act: Activation) -> np.ndarray:
    if act is Activation.RELU:
        return np.maximum(z, 0.0)
    if act is Activation.SIGMOID:
        return _sigmoid(z)
    if act is Activation.SOFTMAX:
        return _softmax(z)
    return z


def forward(net: Network, batch_inputs: np.ndarray, params: Optional[ParamVector] = None):
    """Run the network on a (batch, in_dim) array.

    Returns (outputs, caches) where caches holds per-layer (input, pre-activation,
    activation) for the backward pass.
    """
    if params is None:
        params = net.params
    if params is None:
        raise ValueError("network has no parameters; pass params or set net.params")
    x = np.atleast_2d(np.asarray(batch_inputs, dtype=np.float64))
    if x.shape[1] != net.in_dim:
        raise ValueError(f"input has width {x.shape[1]}, network expects {net.in_dim}")
    caches = []
    a = x
    for spec, (w, b) in zip(net.layers, net.unflatten(params)):
        z = a @ w + b
        a_next = _activate(z, spec.activation)
        caches.append((a, z, a_next))
        a = a_next
    return a, caches


def loss_and_grad(net: Network, batch, params: Optional[ParamVector] = None):
    """Mean batch loss (plus the L2 weight-decay term) and the full gradient.

    ``batch`` is (inputs, targets): integer class labels for cross-entropy,
    a real array of the output shape for binary cross-entropy.
    """
    if params is None:
        params = net.params
    inputs, targets = batch
    outputs, caches = forward(net, inputs, params)
    batch_size = outputs.shape[0]
    if batch_size == 0:
        raise ValueError("batch must be non-empty")

    if net.loss_kind is LossKind.CROSS_ENTROPY:
        labels = np.asarray(targets, dtype=np.intp)
        picked = outputs[np.arange(batch_size), labels]
        data_loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
        delta = outputs.copy()
        delta[np.arange(batch_size), labels] -= 1.0
        delta /= batch_size
    else:
        y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        p = np.clip(outputs, BCE_CLAMP, 1.0 - BCE_CLAMP)
        data_loss = float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())
        # gradient through the output sigmoid, jointly with the loss
        delta = (outputs - y) / outputs.size

    wd = net.weight_decay
    layer_params = net.unflatten(params)
    reg = 0.0
    if wd > 0.0:
        reg = 0.5 * wd * sum(float(np.sum(w * w)) for w, _ in layer_params)
    loss = data_loss + reg
    if not math.isfinite(loss):
        raise DivergedError("non-finite loss")

    grads = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        a_in, z, a_out = caches[i]
        spec = net.layers[i]
        w, _ = layer_params[i]
        if i < len(net.layers) - 1:
            if spec.activation is Activation.RELU:
                delta = delta * (z > 0.0)
            elif spec.activation is Activation.SIGMOID:
                delta = delta * (a_out * (1.0 - a_out))
            # IDENTITY: delta unchanged
        gw = a_in.T @ delta
        if wd > 0.0:
            gw += wd * w
        gb = delta.sum(axis=0)
        grads[i] = (gw, gb)
        if i > 0:
            delta = delta @ w.T
    flat = np.concatenate([np.concatenate((gw.ravel(), gb)) for gw, gb in grads])
    return loss, ParamVector._wrap(flat)


class DatasetKind(Enum):
    BLOBS_CLASSIFY = "blobs_classify"
    AUTOENCODE = "autoencode"


class Dataset:
    """Inputs plus targets with deterministic per-epoch shuffling.

    ``seed`` fixes the shuffle stream: two objectives built over the same
    dataset see identical batch sequences. The last partial batch is kept.
    """

    def __init__(self, inputs, targets, batch_size: int, seed: int):
        self.inputs = np.asarray(inputs, dtype=np.float64)
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be a 2-D array")
        targets = np.asarray(targets)
        if len(targets) != len(self.inputs):
            raise ValueError("inputs and targets must have equal length")
        self.targets = targets
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        self.batch_size = int(batch_size)
        self.seed = int(seed)

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def batches_per_epoch(self) -> int:
        return -(-self.n // self.batch_size)

    @property
    def is_classification(self) -> bool:
        return self.targets.ndim == 1


class MiniBatchObjective(Objective):
    """Training loss of a network over a dataset, one mini-batch at a time.

    ``advance`` moves the batch cursor (reshuffling at each epoch boundary);
    ``eval`` and ``grad`` both use the current batch, so one optimizer step
    sees a single consistent batch.
    """

    def __init__(self, net: Network, data: Dataset):
        if net.in_dim != data.inputs.shape[1]:
            raise ValueError(
                f"network input width {net.in_dim} != dataset width {data.inputs.shape[1]}"
            )
        self._net = net
        self._data = data
        self.reset()

    @property
    def dim(self) -> int:
        return self._net.n_params

    def reset(self) -> None:
        self._rng = Rng(self._data.seed).spawn(_SHUFFLE_KEY)
        self._order = None
        self._pos = 0
        self._batch = None

    def advance(self) -> None:
        data = self._data
        if self._order is None or self._pos >= data.n:
            # a batch covering the whole set needs no shuffle, and skipping it
            # keeps full-batch evals bitwise stable across epochs
            if data.batch_size >= data.n:
                self._order = np.arange(data.n)
            else:
                self._order = self._rng.permutation(data.n)
            self._pos = 0
        idx = self._order[self._pos : self._pos + data.batch_size]
        self._pos += data.batch_size
        self._batch = (data.inputs[idx], data.targets[idx])

    def _current_batch(self):
        if self._batch is None:
            raise RuntimeError("advance() must be called before eval/grad")
        return self._batch

    def eval(self, theta: ParamVector) -> float:
        inputs, targets = self._current_batch()
        outputs, _ = forward(self._net, inputs, theta)
        if self._net.loss_kind is LossKind.CROSS_ENTROPY:
            labels = np.asarray(targets, dtype=np.intp)
            picked = outputs[np.arange(outputs.shape[0]), labels]
            data_loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
        else:
            y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
            p = np.clip(outputs, BCE_CLAMP, 1.0 - BCE_CLAMP)
            data_loss = float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())
        wd = self._net.weight_decay
        if wd > 0.0:
            data_loss += 0.5 * wd * sum(
                float(np.sum(w * w)) for w, _ in self._net.unflatten(theta)
            )
        return data_loss

    def grad(self, theta: ParamVector) -> ParamVector:
        _, g = loss_and_grad(self._net, self._current_batch(), theta)
        return g


def as_objective(net: Network, data: Dataset) -> MiniBatchObjective:
    """Bind a network's training loss to a dataset's batch stream."""
    return MiniBatchObjective(net, data)


def make_desk_dataset(
    kind: DatasetKind,
    n_samples: int,
    dims: int,
    rng: Rng,
    *,
    classes: int = 10,
    batch_size: int = 32,
    shuffle_seed: int = 0,
    noise_scale: float = 9.0,
    latent_dim: int = 8,
) -> Dataset:
    """Deterministic desk-scale datasets.

    BLOBS_CLASSIFY: one Gaussian cluster per class with heavy overlap (a
    linear probe misclassifies well over 10%), so the classifier needs real
    training. AUTOENCODE: inputs in (0, 1)^dims with low-dimensional latent
    structure, serving as their own targets.
    """
    if n_samples < 2 * batch_size:
        raise ValueError(f"need n_samples >= 2*batch_size, got {n_samples} < {2 * batch_size}")
    if kind is DatasetKind.BLOBS_CLASSIFY:
        centers = rng.normal(0.0, 1.0, (classes, dims))
        labels = np.asarray(rng.integers(0, classes, n_samples))
        inputs = centers[labels] + rng.normal(0.0, 1.0, (n_samples, dims)) * noise_scale
        return Dataset(inputs, labels, batch_size, shuffle_seed)
    if kind is DatasetKind.AUTOENCODE:
        z = rng.uniform(0.0, 1.0, (n_samples, latent_dim))
        mix = rng.normal(0.0, 1.0, (latent_dim, dims)) * (2.0 / math.sqrt(latent_dim))
        shift = rng.normal(0.0, 0.5, dims)
        inputs = _sigmoid((z - 0.5) @ mix + shift)
        return Dataset(inputs, inputs, batch_size, shuffle_seed)
    raise ValueError(f"unknown dataset kind: {kind}")


def dataset_to_csv(data: Dataset, path) -> None:
    """One sample per row, features then the integer label in the last column."""
    if not data.is_classification:
        raise ValueError("CSV export is defined for classification datasets")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for x, y in zip(data.inputs, data.targets):
            writer.writerow([f"{v:.17g}" for v in x] + [int(y)])


def dataset_from_csv(path, batch_size: int, seed: int) -> Dataset:
    inputs, labels = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            inputs.append([float(v) for v in row[:-1]])
            labels.append(int(row[-1]))
    if not inputs:
        raise ValueError(f"no samples found in {path}")
    return Dataset(np.array(inputs), np.array(labels, dtype=np.int64), batch_size, seed)


__all__ = [
    "Activation",
    "BCE_CLAMP",
    "Dataset",
    "DatasetKind",
    "LayerSpec",
    "LossKind",
    "MiniBatchObjective",
    "Network",
    "as_objective",
    "build_autoencoder",
    "build_classifier",
    "dataset_from_csv",
    "dataset_to_csv",
    "forward",
    "glorot_init",
    "loss_and_grad",
    "make_desk_dataset",
]
