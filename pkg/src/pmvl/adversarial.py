"""Unsupervised adversarial imputation over partial multi-view data.

No labels here: each sample still owns a trainable latent row, per-view
generator nets map latents to feature space, and observed slots supervise
them through the usual masked squared error. Missing slots get no direct
supervision, so a per-view discriminator is trained to tell observed rows
from generated ones, and generators plus latents descend the combined
objective

    adv_weight * L_adv + L_rec

where L_adv sums, over views that actually have missing rows, the mean
log-score of real rows plus the mean log(1 - score) of generated fills.
Views with nothing missing contribute nothing, so on complete data the
whole adversarial apparatus is inert and training reduces to alternating
least-squares descent. Imputation fills only the masked slots with
generator outputs; observed entries are never overwritten.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import MultiViewDataset
from .errors import ConfigurationError, InputError, TrainingError
from .metrics import nrmse
from .nets import (
    SIGMOID_ALL,
    SIGMOID_HIDDEN,
    backward,
    forward,
    init_net,
    load_net,
    save_net,
    sgd_step,
)
from .supervised import LatentTable, reconstruction_loss

LOG_EPS = 1e-7  # scores are clamped to [eps, 1-eps] before any log


@dataclass
class GanConfig:
    """Knobs for the adversarial training loop.

    One shared step size drives all three phases; latent updates use
    per-sample gradient scaling (the dataset-level 1/N cancelled out) so
    the rate transfers across dataset sizes. adv_weight=0 turns the
    discriminators off entirely, giving the plain unsupervised ablation.
    """

    latent_dim: int = 16
    lr: float = 0.05
    epochs: int = 200
    d_steps: int = 1
    g_steps: int = 1
    h_steps: int = 1
    adv_weight: float = 1.0
    seed: int = 0
    hidden_dims: tuple = (64,)

    def __post_init__(self):
        for name in ("latent_dim", "epochs", "d_steps", "g_steps", "h_steps"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.lr <= 0:
            raise ConfigurationError("lr must be positive")
        if self.adv_weight < 0:
            raise ConfigurationError("adv_weight must be >= 0")
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
class AdversarialModel:
    latent: LatentTable
    generators: list
    discriminators: list
    config: GanConfig
    d_trace: list = field(default_factory=list)
    g_trace: list = field(default_factory=list)
    rec_trace: list = field(default_factory=list)


@dataclass
class ImputationResult:
    """Completed dataset plus imputation error when ground truth was given.

    The NRMSE fields stay None when no truth is supplied or nothing was
    missing in the first place.
    """

    completed: MultiViewDataset
    per_view_nrmse: list | None = None
    overall_nrmse: float | None = None


def unsup_reconstruction_loss(model, data):
    """Masked squared error of the generators on observed slots, over N."""
    return reconstruction_loss(model.generators, model.latent, data)


def adversarial_loss(model, data):
    """Sum over views with missing rows of real and fake log terms.

    Real term: mean log score of that view's observed feature rows. Fake
    term: mean log(1 - score) of generator outputs for the rows missing
    that view. Scores are clamped away from 0 and 1 so both logs stay
    finite; views with no missing rows are skipped entirely.
    """
    total = 0.0
    for v, disc in enumerate(model.discriminators):
        miss = data.mask[:, v] == 0
        if not miss.any():
            continue
        obs = ~miss
        if obs.any():
            real = np.clip(forward(disc, data.views[v][obs]), LOG_EPS, 1 - LOG_EPS)
            total += float(np.log(real).mean())
        fake_rows = forward(model.generators[v], model.latent.H[miss])
        fake = np.clip(forward(disc, fake_rows), LOG_EPS, 1 - LOG_EPS)
        total += float(np.log1p(-fake).mean())
    return total


def _log_upstream(scores, sign, count):
    """d(mean log term)/d(score); zero where the clamp was active."""
    inside = (scores > LOG_EPS) & (scores < 1 - LOG_EPS)
    if sign > 0:
        return np.where(inside, 1.0 / scores, 0.0) / count
    return np.where(inside, -1.0 / (1.0 - scores), 0.0) / count


def _add_bundle_into(acc, bundle):
    for i in range(len(acc.d_weights)):
        acc.d_weights[i] += bundle.d_weights[i]
        acc.d_biases[i] += bundle.d_biases[i]


def discriminator_gradients(model, data):
    """Exact adversarial-loss gradients per discriminator; None when inert."""
    out = []
    for v, disc in enumerate(model.discriminators):
        miss = data.mask[:, v] == 0
        if not miss.any():
            out.append(None)
            continue
        obs = ~miss
        fake_rows = forward(model.generators[v], model.latent.H[miss])
        scores_f = forward(disc, fake_rows)
        bundle = backward(disc, fake_rows, _log_upstream(scores_f, -1, int(miss.sum())))
        if obs.any():
            x = data.views[v][obs]
            scores_r = forward(disc, x)
            _add_bundle_into(bundle, backward(disc, x, _log_upstream(scores_r, +1, int(obs.sum()))))
        out.append(bundle)
    return out


def combined_upstreams(model, data):
    """dC/d(generator output) per view, C = adv_weight * L_adv + L_rec.

    Observed rows carry the (2/N)-scaled reconstruction residual; rows
    missing the view carry the adversarial fake-term path pulled back
    through the frozen discriminator.
    """
    n = data.n_samples
    ups = []
    for v, gen in enumerate(model.generators):
        out = forward(gen, model.latent.H)
        u = (2.0 / n) * (out - data.views[v]) * data.mask[:, v:v + 1]
        miss = data.mask[:, v] == 0
        if model.config.adv_weight > 0 and miss.any():
            disc = model.discriminators[v]
            scores = forward(disc, out[miss])
            ud = model.config.adv_weight * _log_upstream(scores, -1, int(miss.sum()))
            u[miss] += backward(disc, out[miss], ud).d_input
        ups.append(u)
    return ups


def latent_gradient(model, data):
    """Per-row gradient of the combined objective, scaled by N.

    The dataset-level objective carries 1/N and 1/n_missing factors; the
    N rescale keeps latent step sizes meaningful independent of dataset
    size, matching the supervised trainer's convention.
    """
    g = np.zeros_like(model.latent.H)
    for v, u in enumerate(combined_upstreams(model, data)):
        g += backward(model.generators[v], model.latent.H, u).d_input
    return data.n_samples * g


def _check_finite(value, phase, epoch):
    if not np.isfinite(value):
        raise TrainingError(f"{phase} phase diverged at epoch {epoch}")


def train_unsupervised(data, config=None):
    """Alternating discriminator-ascent, generator-descent, latent-descent."""
    config = config or GanConfig()
    n, k = data.n_samples, config.latent_dim
    rng = np.random.default_rng(config.seed)
    latent = LatentTable(rng.uniform(-0.01, 0.01, size=(n, k)))
    gens = [
        init_net([k, *config.hidden_dims, d], activation=SIGMOID_HIDDEN, rng=rng)
        for d in data.view_dims
    ]
    discs = [
        init_net([d, *reversed(config.hidden_dims), 1], activation=SIGMOID_ALL, rng=rng)
        for d in data.view_dims
    ]
    model = AdversarialModel(latent, gens, discs, config)
    for epoch in range(config.epochs):
        for _ in range(config.d_steps):
            for disc, bundle in zip(discs, discriminator_gradients(model, data)):
                if bundle is None:
                    continue
                for i in range(len(bundle.d_weights)):  # ascend: flip the gradient
                    bundle.d_weights[i] *= -1.0
                    bundle.d_biases[i] *= -1.0
                sgd_step(disc, bundle, config.lr)
        adv = adversarial_loss(model, data)
        _check_finite(adv, "discriminator", epoch)
        model.d_trace.append(adv)

        for _ in range(config.g_steps):
            for v, u in enumerate(combined_upstreams(model, data)):
                sgd_step(gens[v], backward(gens[v], latent.H, u), config.lr)
        combined = config.adv_weight * adversarial_loss(model, data)
        combined += unsup_reconstruction_loss(model, data)
        _check_finite(combined, "generator", epoch)
        model.g_trace.append(combined)

        for _ in range(config.h_steps):
            latent.H -= config.lr * latent_gradient(model, data)
        rec = unsup_reconstruction_loss(model, data)
        _check_finite(rec, "latent", epoch)
        model.rec_trace.append(rec)
    return model


def impute(model, data, truth=None):
    """Fill masked slots with generator outputs; observed slots stay put.

    Passing the pre-masking dataset as truth scores the fill with NRMSE
    over the previously missing slots; with nothing missing the error is
    undefined and the report fields stay None.
    """
    if data.n_samples != model.latent.n_rows:
        raise InputError(
            f"dataset has {data.n_samples} rows, model carries {model.latent.n_rows} latents"
        )
    completed = data.copy()
    for v, gen in enumerate(model.generators):
        hole = data.mask[:, v] == 0
        if hole.any():
            completed.views[v][hole] = forward(gen, model.latent.H[hole])
    completed.mask = np.ones_like(data.mask)
    result = ImputationResult(completed)
    if truth is not None and (data.mask == 0).any():
        report = nrmse(completed.views, truth.views, data.mask == 0)
        result.per_view_nrmse = report.per_view
        result.overall_nrmse = report.overall
    return result


def extract_latents(model):
    """Trained latent table, for downstream clustering or inspection."""
    return model.latent


def save_gan(model, out_dir):
    """Checkpoint: manifest JSON plus per-view net files and the latents."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, net in enumerate(model.generators):
        save_net(net, out_dir / f"gen_v{i}.json")
    for i, net in enumerate(model.discriminators):
        save_net(net, out_dir / f"disc_v{i}.json")
    model.latent.H.astype("<f8").tofile(out_dir / "latent.bin")
    manifest = {
        "config": model.config.to_dict(),
        "n_views": len(model.generators),
        "view_dims": [net.output_dim for net in model.generators],
        "n_samples": model.latent.n_rows,
        "latent_dim": model.latent.dim,
        "d_trace": model.d_trace,
        "g_trace": model.g_trace,
        "rec_trace": model.rec_trace,
        "dtype": "<f8",
    }
    path = out_dir / "gan.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return path


def load_gan(manifest_path):
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "gan.json"
    m = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    config = GanConfig.from_dict(m["config"])
    gens = [load_net(base / f"gen_v{i}.json") for i in range(m["n_views"])]
    discs = [load_net(base / f"disc_v{i}.json") for i in range(m["n_views"])]
    latent = np.fromfile(base / "latent.bin", dtype="<f8")
    expected = m["n_samples"] * m["latent_dim"]
    if latent.size != expected:
        raise InputError(f"latent.bin holds {latent.size} floats, expected {expected}")
    return AdversarialModel(
        latent=LatentTable(latent.reshape(m["n_samples"], m["latent_dim"])),
        generators=gens,
        discriminators=discs,
        config=config,
        d_trace=list(m.get("d_trace", [])),
        g_trace=list(m.get("g_trace", [])),
        rec_trace=list(m.get("rec_trace", [])),
    )
