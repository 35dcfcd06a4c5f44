"""Dense feed-forward networks with analytic gradients.

Plain numpy kernels: forward evaluation, exact backpropagation with respect
to both the parameters and the input batch, and a bare gradient-descent
step. Everything runs in float64. Weights are (out, in) matrices, biases
are (out,) vectors, and input batches are (B, d_in) with one sample per row.

Two activation modes exist. Reconstruction and generator nets use sigmoid
hidden layers with a linear output (their targets are not confined to
(0, 1)); discriminators use sigmoid on every layer, output included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DimensionError

SIGMOID_HIDDEN = "sigmoid_hidden"  # sigmoid on hidden layers, linear output
SIGMOID_ALL = "sigmoid_all"        # sigmoid on every layer, output included

_ACTIVATIONS = (SIGMOID_HIDDEN, SIGMOID_ALL)


def sigmoid(x):
    """Numerically stable logistic function, strictly inside (0, 1)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    # float64 rounds to exactly 0 or 1 once |x| is large; nudge back inside
    # the open interval so downstream logs stay finite
    tiny = np.finfo(np.float64).tiny
    np.clip(out, tiny, 1.0 - np.finfo(np.float64).epsneg, out=out)
    return out


@dataclass
class DenseNet:
    """A fully connected network: affine layers plus sigmoid activations.

    The l2_coefficient is a weight-decay strength on the weight matrices
    only (biases are not penalized); the penalty it refers to is
    0.5 * c * sum of squared weight entries, so its gradient is c * W.
    """

    layer_dims: list
    weights: list
    biases: list
    activation: str = SIGMOID_HIDDEN
    l2_coefficient: float = 0.0

    def __post_init__(self):
        if len(self.layer_dims) < 2:
            raise ConfigurationError("layer_dims needs at least an input/output pair")
        if any(int(d) <= 0 for d in self.layer_dims):
            raise ConfigurationError(f"layer_dims must be positive, got {self.layer_dims}")
        if self.activation not in _ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if self.l2_coefficient < 0:
            raise ConfigurationError("l2_coefficient must be >= 0")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise DimensionError(
                f"{len(self.layer_dims)} dims require {len(self.layer_dims) - 1} weight/bias pairs"
            )
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_dims[i + 1], self.layer_dims[i])
            if w.shape != want:
                raise DimensionError(f"layer {i}: weight shape {w.shape}, expected {want}")
            if b.shape != (want[0],):
                raise DimensionError(f"layer {i}: bias shape {b.shape}, expected {(want[0],)}")

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def input_dim(self):
        return int(self.layer_dims[0])

    @property
    def output_dim(self):
        return int(self.layer_dims[-1])

    def layer_activated(self, i):
        """Whether layer i's output passes through the sigmoid."""
        return i < self.n_layers - 1 or self.activation == SIGMOID_ALL

    def copy(self):
        return DenseNet(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
            l2_coefficient=self.l2_coefficient,
        )


@dataclass
class GradientBundle:
    """Gradients of a scalar loss: per-layer parameter grads plus d_input."""

    d_weights: list
    d_biases: list
    d_input: np.ndarray

    def accumulate(self, other):
        """In-place sum with another bundle of identical shapes."""
        for dw, ow in zip(self.d_weights, other.d_weights):
            dw += ow
        for db, ob in zip(self.d_biases, other.d_biases):
            db += ob
        self.d_input += other.d_input
        return self

    def scale(self, factor):
        for dw in self.d_weights:
            dw *= factor
        for db in self.d_biases:
            db *= factor
        self.d_input *= factor
        return self


def init_net(layer_dims, activation=SIGMOID_HIDDEN, l2_coefficient=0.0, rng=0):
    """Build a net with uniform [-r, r] weights, r = sqrt(6/(fan_in+fan_out)).

    Biases start at zero. `rng` is a seed or a numpy Generator.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    weights, biases = [], []
    for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
        r = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-r, r, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))
    return DenseNet(list(layer_dims), weights, biases, activation, l2_coefficient)


def _check_input(net, x, where="input"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise DimensionError(
            f"layer 0 ({where}): batch has {x.shape[-1] if x.ndim else 0} columns, "
            f"net expects {net.input_dim}"
        )
    return x


def forward(net, input_batch):
    """Evaluate the net on a (B, d_in) batch; returns (B, d_out)."""
    a = _check_input(net, input_batch)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        a = sigmoid(z) if net.layer_activated(i) else z
    return a


def backward(net, input_batch, upstream_grad):
    """Backpropagate an upstream gradient through the net.

    `upstream_grad` is dL/d(output), shaped like forward's result. Returns a
    GradientBundle whose d_weights include the l2 term c * W (biases carry no
    decay) and whose d_input is dL/d(input_batch). Parameter gradients are
    summed over the batch, i.e. they are exact gradients of the scalar L.
    """
    x = _check_input(net, input_batch)
    acts = [x]
    a = x
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        a = sigmoid(z) if net.layer_activated(i) else z
        acts.append(a)

    g = np.asarray(upstream_grad, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape != acts[-1].shape:
        raise DimensionError(
            f"upstream gradient shape {g.shape} does not match output {acts[-1].shape}"
        )

    d_weights = [None] * net.n_layers
    d_biases = [None] * net.n_layers
    for i in reversed(range(net.n_layers)):
        if net.layer_activated(i):
            s = acts[i + 1]
            g = g * s * (1.0 - s)
        d_weights[i] = g.T @ acts[i] + net.l2_coefficient * net.weights[i]
        d_biases[i] = g.sum(axis=0)
        g = g @ net.weights[i]
    return GradientBundle(d_weights, d_biases, g)


def zero_bundle(net, batch_rows):
    return GradientBundle(
        [np.zeros_like(w) for w in net.weights],
        [np.zeros_like(b) for b in net.biases],
        np.zeros((batch_rows, net.input_dim)),
    )


def sgd_step(net, bundle, lr):
    """Plain gradient-descent update, in place: param -= lr * grad."""
    if lr <= 0:
        raise ConfigurationError(f"learning rate must be positive, got {lr}")
    for i, (w, dw) in enumerate(zip(net.weights, bundle.d_weights)):
        if w.shape != dw.shape:
            raise DimensionError(f"layer {i}: gradient shape {dw.shape} vs weight {w.shape}")
        w -= lr * dw
    for b, db in zip(net.biases, bundle.d_biases):
        b -= lr * db
    return net


def l2_penalty(net):
    """0.5 * c * sum of squared weight entries; the term backward's grads include."""
    if net.l2_coefficient == 0.0:
        return 0.0
    return 0.5 * net.l2_coefficient * sum(float(np.sum(w * w)) for w in net.weights)


def save_net(net, path):
    """Write a net checkpoint.

    `path` gets a JSON header ({layer_dims, activation, l2_coefficient,
    data_file}) and a sidecar binary named by data_file holding, per layer,
    the row-major weight matrix followed by the bias vector, all as
    little-endian float64.
    """
    path = Path(path)
    bin_name = path.stem + ".bin"
    header = {
        "layer_dims": [int(d) for d in net.layer_dims],
        "activation": net.activation,
        "l2_coefficient": float(net.l2_coefficient),
        "dtype": "<f8",
        "data_file": bin_name,
    }
    blob = b"".join(
        arr.astype("<f8").tobytes(order="C")
        for w, b in zip(net.weights, net.biases)
        for arr in (w, b)
    )
    path.write_text(json.dumps(header, sort_keys=True, indent=1))
    (path.parent / bin_name).write_bytes(blob)


def load_net(path):
    path = Path(path)
    header = json.loads(path.read_text())
    dims = header["layer_dims"]
    raw = (path.parent / header["data_file"]).read_bytes()
    flat = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    weights, biases = [], []
    ofs = 0
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        weights.append(flat[ofs:ofs + d_out * d_in].reshape(d_out, d_in).copy())
        ofs += d_out * d_in
        biases.append(flat[ofs:ofs + d_out].copy())
        ofs += d_out
    if ofs != flat.size:
        raise DimensionError(f"{path}: checkpoint holds {flat.size} floats, expected {ofs}")
    return DenseNet(dims, weights, biases, header["activation"], header["l2_coefficient"])
