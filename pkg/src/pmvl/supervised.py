"""Supervised latent-representation learning over partial multi-view data.

Every sample owns a trainable latent row h_n. Per-view decoder nets map
latents back to the observed features, and training alternates two phases
per epoch: net parameters descend the masked reconstruction loss

    (1/N) sum_n sum_v s_nv ||f_v(h_n) - x_n^(v)||^2

while latent rows descend that plus lam times a margin loss that pulls each
h_n toward its own class centroid and away from the best rival centroid.
Classification is nearest-centroid by dot product in latent space. At test
time a sample's latent is recovered by gradient descent on its own masked
reconstruction error through frozen (optionally re-tuned) nets, so any
subset of views yields a usable representation.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError, TrainingError
from .metrics import classification_report
from .nets import (
    SIGMOID_HIDDEN,
    backward,
    forward,
    init_net,
    l2_penalty,
    load_net,
    save_net,
    sgd_step,
)

EARLY_STOP_WINDOW = 10


@dataclass
class TrainConfig:
    """Knobs for the alternating training loop.

    lr_nets drives the decoder updates (full-batch averaged gradients);
    lr_latent drives the latent rows (per-sample gradients, so it transfers
    across dataset sizes). lam weighs the margin loss against
    reconstruction. tol stops training early when the relative objective
    change over a 10-epoch window falls below it.
    """

    latent_dim: int = 32
    lam: float = 1.0
    lr_nets: float = 0.1
    lr_latent: float = 0.1
    epochs: int = 100
    net_iters: int = 1
    latent_iters: int = 1
    retune_epochs: int = 100
    infer_iters: int = 200
    infer_lr: float | None = None
    seed: int = 0
    tol: float = 1e-5
    hidden_dims: tuple = (64,)
    l2_coefficient: float = 0.001
    centroid_excludes_self: bool = False

    def __post_init__(self):
        for name in ("latent_dim", "epochs", "net_iters", "latent_iters", "infer_iters"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("lam", "lr_nets", "lr_latent", "tol"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.infer_lr is not None and self.infer_lr <= 0:
            raise ConfigurationError("infer_lr must be positive")
        if self.retune_epochs < 0:
            raise ConfigurationError("retune_epochs must be >= 0")
        if self.l2_coefficient < 0:
            raise ConfigurationError("l2_coefficient must be >= 0")
        self.hidden_dims = tuple(int(d) for d in self.hidden_dims)
        if any(d <= 0 for d in self.hidden_dims):
            raise ConfigurationError("hidden_dims must be positive")

    def to_dict(self):
        d = dict(self.__dict__)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["hidden_dims"] = tuple(d.get("hidden_dims", ()))
        return cls(**d)


@dataclass
class LatentTable:
    """One trainable latent row per sample."""

    H: np.ndarray

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.float64)
        if self.H.ndim != 2:
            raise InputError(f"latent table must be 2-D, got shape {self.H.shape}")
        if not np.isfinite(self.H).all():
            raise InputError("latent table contains non-finite entries")

    @property
    def n_rows(self):
        return self.H.shape[0]

    @property
    def dim(self):
        return self.H.shape[1]


@dataclass
class SupervisedModel:
    latent: LatentTable
    recon_nets: list
    centroids: np.ndarray
    config: TrainConfig
    retuned_nets: list | None = None
    objective_trace: list = field(default_factory=list)

    @property
    def n_classes(self):
        return self.centroids.shape[0]

    def active_nets(self):
        """Nets used at inference: re-tuned when available."""
        return self.retuned_nets if self.retuned_nets is not None else self.recon_nets


def reconstruction_loss(nets, latent, data):
    """Masked squared reconstruction error averaged over samples."""
    total = 0.0
    for v, net in enumerate(nets):
        diff = (forward(net, latent.H) - data.views[v]) * data.mask[:, v:v + 1]
        total += float((diff ** 2).sum())
    return total / data.n_samples


def class_centroids(h, labels, n_classes):
    centroids = np.empty((n_classes, h.shape[1]))
    for c in range(n_classes):
        members = labels == c
        if not members.any():
            raise TrainingError(f"class {c} has no samples to form a centroid")
        centroids[c] = h[members].mean(axis=0)
    return centroids


def _margin_scores(h, labels, centroids, own_centroids):
    """Dot-product scores; optionally swap in per-row own-class centroids."""
    scores = h @ centroids.T
    if own_centroids is not None:
        scores[np.arange(h.shape[0]), labels] = (own_centroids * h).sum(axis=1)
    return scores


def classification_loss(latent, labels, centroids, own_centroids=None):
    """Mean margin penalty; exactly zero when every argmax centroid is correct.

    Per sample: max(0, [wrong argmax] + score(best rival or self) - score(own
    class)). A misclassified sample therefore contributes 1 plus its score
    gap; a correctly classified one contributes 0 with no approximation.
    own_centroids (N x K) substitutes a per-row centroid for the sample's
    own class, used by the leave-one-out training variant.
    """
    scores = _margin_scores(latent.H, labels, centroids, own_centroids)
    n = scores.shape[0]
    predicted = scores.argmax(axis=1)
    margin = (predicted != labels).astype(np.float64)
    gap = scores[np.arange(n), predicted] - scores[np.arange(n), labels]
    return float(np.maximum(margin + gap, 0.0).mean())


def latent_gradients(nets, latent, data, labels, centroids, lam, own_centroids=None):
    """Per-row gradient of the per-sample objective.

    Row n of the result differentiates sum_v s_nv ||f_v(h_n) - x_n||^2
    plus lam times that sample's margin term, with centroids held constant.
    The dataset-level objective divides by N, so its gradient is this
    result over N; updates use the undivided rows to keep step sizes
    independent of dataset size.
    """
    h = latent.H
    g = np.zeros_like(h)
    for v, net in enumerate(nets):
        diff = (forward(net, h) - data.views[v]) * data.mask[:, v:v + 1]
        g += backward(net, h, 2.0 * diff).d_input
    scores = _margin_scores(h, labels, centroids, own_centroids)
    predicted = scores.argmax(axis=1)
    mis = predicted != labels
    if mis.any():
        own = centroids[labels[mis]] if own_centroids is None else own_centroids[mis]
        g[mis] += lam * (centroids[predicted[mis]] - own)
    return g


def _objective(nets, latent, data, centroids, config, own_centroids=None):
    obj = reconstruction_loss(nets, latent, data)
    obj += config.lam * classification_loss(latent, data.labels, centroids, own_centroids)
    return obj + sum(l2_penalty(net) for net in nets)


def _leave_one_out_centroids(h, labels, n_classes):
    counts = np.bincount(labels, minlength=n_classes)
    if (counts < 2).any():
        raise TrainingError("leave-one-out centroids need every class size >= 2")
    sums = np.zeros((n_classes, h.shape[1]))
    np.add.at(sums, labels, h)
    return (sums[labels] - h) / (counts[labels] - 1)[:, None]


def train(data, config=None):
    """Alternating optimization of decoder nets and latent rows."""
    config = config or TrainConfig()
    if data.labels is None:
        raise InputError("supervised training needs labels")
    n, k = data.n_samples, config.latent_dim
    rng = np.random.default_rng(config.seed)
    latent = LatentTable(rng.uniform(-0.01, 0.01, size=(n, k)))
    nets = [
        init_net(
            [k, *config.hidden_dims, d],
            activation=SIGMOID_HIDDEN,
            l2_coefficient=config.l2_coefficient,
            rng=rng,
        )
        for d in data.view_dims
    ]
    trace = []
    centroids = None
    for epoch in range(config.epochs):
        centroids = class_centroids(latent.H, data.labels, data.n_classes)
        own = None
        if config.centroid_excludes_self:
            own = _leave_one_out_centroids(latent.H, data.labels, data.n_classes)
        for _ in range(config.net_iters):
            for v, net in enumerate(nets):
                diff = (forward(net, latent.H) - data.views[v]) * data.mask[:, v:v + 1]
                bundle = backward(net, latent.H, (2.0 / n) * diff)
                sgd_step(net, bundle, config.lr_nets)
        for _ in range(config.latent_iters):
            g = latent_gradients(
                nets, latent, data, data.labels, centroids, config.lam, own_centroids=own
            )
            latent.H -= config.lr_latent * g
        obj = _objective(nets, latent, data, centroids, config, own_centroids=own)
        if not np.isfinite(obj):
            raise TrainingError(f"objective diverged at epoch {epoch}")
        trace.append(obj)
        if len(trace) > EARLY_STOP_WINDOW:
            prev = trace[-1 - EARLY_STOP_WINDOW]
            if abs(prev - trace[-1]) < config.tol * max(abs(prev), 1e-12):
                break
    centroids = class_centroids(latent.H, data.labels, data.n_classes)
    return SupervisedModel(
        latent=latent,
        recon_nets=nets,
        centroids=centroids,
        config=config,
        objective_trace=trace,
    )


def _view_objective(net, h, x, mask_col, n):
    diff = (forward(net, h) - x) * mask_col
    return float((diff ** 2).sum()) / n + l2_penalty(net)


def retune(model, data):
    """Refit decoder nets on the frozen latent table, reconstruction only.

    Latents and centroids stay untouched. Each view descends its own
    objective with step acceptance: a step that increases the objective is
    rolled back and that view's rate halved, so every accepted step is a
    descent step (within 1e-9).
    """
    h = model.latent.H
    n = data.n_samples
    nets = [net.copy() for net in model.recon_nets]
    rates = [model.config.lr_nets] * len(nets)
    for _ in range(model.config.retune_epochs):
        for v, net in enumerate(nets):
            if rates[v] < 1e-15:
                continue
            x, mask_col = data.views[v], data.mask[:, v:v + 1]
            before = _view_objective(net, h, x, mask_col, n)
            while rates[v] >= 1e-15:
                candidate = net.copy()
                diff = (forward(candidate, h) - x) * mask_col
                bundle = backward(candidate, h, (2.0 / n) * diff)
                sgd_step(candidate, bundle, rates[v])
                after = _view_objective(candidate, h, x, mask_col, n)
                if after <= before + 1e-9:
                    nets[v] = candidate
                    break
                rates[v] /= 2.0
    return replace(model, retuned_nets=nets)


def _infer_batch(nets, views, mask, iters, lr):
    """Shared gradient-descent recovery of latents for a batch of samples.

    Rows are independent (per-row loss, per-row gradient), so batching is
    exactly the per-sample loop, just vectorized. Returns the best iterate
    per row by masked reconstruction loss, starting from zeros.
    """
    m = views[0].shape[0]
    h = np.zeros((m, nets[0].input_dim))

    def row_loss(cur):
        loss = np.zeros(m)
        for v, net in enumerate(nets):
            diff = (forward(net, cur) - views[v]) * mask[:, v:v + 1]
            loss += (diff ** 2).sum(axis=1)
        return loss

    best_h = h.copy()
    best_loss = row_loss(h)
    for _ in range(iters):
        g = np.zeros_like(h)
        for v, net in enumerate(nets):
            diff = (forward(net, h) - views[v]) * mask[:, v:v + 1]
            g += backward(net, h, 2.0 * diff).d_input
        h = h - lr * g
        loss = row_loss(h)
        better = loss < best_loss
        best_h[better] = h[better]
        best_loss[better] = loss[better]
    return best_h, best_loss


def _infer_lr(config):
    return config.infer_lr if config.infer_lr is not None else config.lr_latent


def _inference_nets(model):
    if model.retuned_nets is None:
        warnings.warn("model has no re-tuned nets; inferring through training nets", stacklevel=3)
        return model.recon_nets
    return model.retuned_nets


def infer_latent(model, sample_views, sample_mask, iters=None, lr=None):
    """Recover one sample's latent vector from whichever views it has."""
    sample_mask = np.asarray(sample_mask).reshape(-1)
    if sample_mask.sum() == 0:
        raise InputError("sample has no observed view")
    nets = _inference_nets(model)
    views = [np.atleast_2d(np.asarray(v, dtype=np.float64)) for v in sample_views]
    h, _ = _infer_batch(
        nets,
        views,
        sample_mask[None, :],
        iters if iters is not None else model.config.infer_iters,
        lr if lr is not None else _infer_lr(model.config),
    )
    return h[0]


def infer_latents(model, data, iters=None, lr=None):
    """Latent rows for a whole dataset; same result as per-sample calls."""
    if (data.mask.sum(axis=1) == 0).any():
        raise InputError("a sample has no observed view")
    nets = _inference_nets(model)
    h, _ = _infer_batch(
        nets,
        data.views,
        data.mask,
        iters if iters is not None else model.config.infer_iters,
        lr if lr is not None else _infer_lr(model.config),
    )
    return h


def classify(model, latent_vector):
    """Highest centroid dot product wins; ties go to the smaller class id."""
    scores = model.centroids @ np.asarray(latent_vector, dtype=np.float64)
    return int(np.argmax(scores))


def evaluate(model, test_data):
    """Infer a latent per test row, classify it, and score against labels."""
    if test_data.labels is None:
        raise InputError("evaluation needs labeled test data")
    h = infer_latents(model, test_data)
    preds = np.argmax(h @ model.centroids.T, axis=1)
    return classification_report(preds, test_data.labels)


def save_model(model, out_dir):
    """Checkpoint: manifest JSON, per-view net files, latents and centroids."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, net in enumerate(model.recon_nets):
        save_net(net, out_dir / f"recon_v{i}.json")
    if model.retuned_nets is not None:
        for i, net in enumerate(model.retuned_nets):
            save_net(net, out_dir / f"retuned_v{i}.json")
    model.latent.H.astype("<f8").tofile(out_dir / "latent.bin")
    model.centroids.astype("<f8").tofile(out_dir / "centroids.bin")
    manifest = {
        "config": model.config.to_dict(),
        "n_classes": model.n_classes,
        "n_views": len(model.recon_nets),
        "view_dims": [net.output_dim for net in model.recon_nets],
        "n_samples": model.latent.n_rows,
        "latent_dim": model.latent.dim,
        "has_retuned": model.retuned_nets is not None,
        "objective_trace": model.objective_trace,
        "dtype": "<f8",
    }
    path = out_dir / "model.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return path


def load_model(manifest_path):
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "model.json"
    m = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    config = TrainConfig.from_dict(m["config"])
    recon = [load_net(base / f"recon_v{i}.json") for i in range(m["n_views"])]
    retuned = None
    if m["has_retuned"]:
        retuned = [load_net(base / f"retuned_v{i}.json") for i in range(m["n_views"])]
    latent = np.fromfile(base / "latent.bin", dtype="<f8")
    expected = m["n_samples"] * m["latent_dim"]
    if latent.size != expected:
        raise InputError(f"latent.bin holds {latent.size} floats, expected {expected}")
    centroids = np.fromfile(base / "centroids.bin", dtype="<f8")
    if centroids.size != m["n_classes"] * m["latent_dim"]:
        raise InputError("centroids.bin size disagrees with the manifest")
    return SupervisedModel(
        latent=LatentTable(latent.reshape(m["n_samples"], m["latent_dim"])),
        recon_nets=recon,
        centroids=centroids.reshape(m["n_classes"], m["latent_dim"]),
        config=config,
        retuned_nets=retuned,
        objective_trace=list(m.get("objective_trace", [])),
    )
