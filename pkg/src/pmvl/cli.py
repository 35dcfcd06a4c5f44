"""Command-line front end: synth, mask, train-sup, train-unsup, impute, eval, sweep.

Every command writes a JSON report into --out; wall-clock time lives in the
report's single "timestamp" field so that everything else is byte-stable
under identical arguments and seeds. Option precedence is command line over
--config file over the named --preset.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .adversarial import GanConfig, impute as gan_impute, save_gan, train_unsupervised
from .baselines import (
    CLASS_MEAN,
    GLOBAL_MEAN,
    SVD,
    SvdParams,
    concat_classify,
    impute_baseline,
)
from .data import (
    MissingSpec,
    apply_missing_pattern,
    load_dataset,
    measured_rate,
    save_dataset,
    split,
    synth_dataset,
)
from .errors import ConfigurationError, PmvlError
from .metrics import evaluate_clustering, nrmse
from .supervised import TrainConfig, evaluate, load_model, retune, save_model, train

# per-dataset starting points; names follow the usual benchmark suites
SUP_PRESETS = {
    "synthetic": dict(latent_dim=32, lam=10.0, lr_nets=0.05, lr_latent=0.02,
                      epochs=400, infer_iters=300, infer_lr=0.05, hidden_dims=(64,)),
    "handwritten": dict(latent_dim=64, lam=1.0, lr_nets=0.001, lr_latent=0.001,
                        epochs=200, infer_iters=300, infer_lr=0.001, hidden_dims=(200,)),
    "cub": dict(latent_dim=128, lam=1.0, lr_nets=0.01, lr_latent=0.01,
                epochs=200, infer_iters=300, infer_lr=0.01, hidden_dims=()),
    "animal": dict(latent_dim=256, lam=1.0, lr_nets=0.001, lr_latent=0.001,
                   epochs=200, infer_iters=300, infer_lr=0.001, hidden_dims=(512, 1024)),
}
GAN_PRESETS = {
    "synthetic": dict(latent_dim=16, lr=0.05, epochs=200, hidden_dims=(64,), d_steps=1),
    "handwritten": dict(latent_dim=64, lr=0.001, epochs=200, hidden_dims=(200,), d_steps=1),
    "cub": dict(latent_dim=128, lr=0.01, epochs=200, hidden_dims=(), d_steps=1),
    "animal": dict(latent_dim=256, lr=0.001, epochs=200, hidden_dims=(512, 1024), d_steps=1),
}

SWEEP_METHODS = (
    "sup", "sup-noretune", "mean-nc", "mean-knn",
    "unsup", "unsup-nogan", "mean-fill", "class-fill", "svd-fill",
)


def _ints(text):
    return tuple(int(t) for t in text.split(",") if t.strip() != "")


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip() != ""]


def _write_report(out_dir, payload):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = dict(payload)
    payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    path = out_dir / "report.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    return path


def _settings(args, preset_table, keys, config_cls):
    """Merge preset, config file, and explicit flags, in rising precedence.

    The config file may hold settings for several commands at once, so keys
    the target config class does not define are dropped rather than rejected.
    """
    merged = dict(preset_table[args.preset])
    if args.config:
        merged.update(json.loads(Path(args.config).read_text()))
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    known = {f.name for f in dataclasses.fields(config_cls)} - {"seed"}
    merged = {k: v for k, v in merged.items() if k in known}
    if isinstance(merged.get("hidden_dims"), str):
        merged["hidden_dims"] = _ints(merged["hidden_dims"])
    if isinstance(merged.get("hidden_dims"), list):
        merged["hidden_dims"] = tuple(merged["hidden_dims"])
    return merged


def cmd_synth(args):
    data = synth_dataset(
        args.n, args.classes, args.zdim, list(_ints(args.view_dims)),
        seed=args.seed, noise_scale=args.noise, center_scale=args.center_scale,
        nuisance_scale=args.nuisance,
    )
    manifest = save_dataset(data, args.out, name="dataset")
    _write_report(args.out, {
        "command": "synth",
        "manifest": str(manifest),
        "n": data.n_samples,
        "classes": data.n_classes,
        "view_dims": data.view_dims,
        "seed": args.seed,
    })
    print(manifest)
    return 0


def cmd_mask(args):
    data = load_dataset(args.data)
    masked = apply_missing_pattern(data, MissingSpec(args.eta, seed=args.seed))
    manifest = save_dataset(masked, args.out, name="dataset")
    _write_report(args.out, {
        "command": "mask",
        "manifest": str(manifest),
        "requested_rate": args.eta,
        "measured_rate": measured_rate(masked),
        "seed": args.seed,
    })
    print(manifest)
    return 0


def _sup_pipeline(data, eta, train_frac, cfg, seed, with_retune):
    """Split, mask both halves at eta, train, optionally retune, evaluate."""
    tr, te = split(data, train_frac, seed=seed)
    if eta > 0:
        tr = apply_missing_pattern(tr, MissingSpec(eta, seed=seed))
        te = apply_missing_pattern(te, MissingSpec(eta, seed=seed + 1))
    model = train(tr, cfg)
    if with_retune:
        model = retune(model, tr)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = evaluate(model, te)
    return model, report


def cmd_train_sup(args):
    data = load_dataset(args.data)
    merged = _settings(args, SUP_PRESETS, (
        "latent_dim", "lam", "lr_nets", "lr_latent", "epochs",
        "infer_iters", "infer_lr", "hidden_dims",
    ), TrainConfig)
    out = Path(args.out)
    accs = []
    seeds = [args.seed + r for r in range(args.repeats)]
    first_model = None
    for s in seeds:
        cfg = TrainConfig(seed=s, **merged)
        model, report = _sup_pipeline(
            data, args.eta, args.train_frac, cfg, s, not args.no_retune)
        if first_model is None:
            first_model = model
        accs.append(report.accuracy)
    ckpt = save_model(first_model, out / "model")
    _write_report(out, {
        "command": "train-sup",
        "checkpoint": str(ckpt),
        "config": first_model.config.to_dict(),
        "eta": args.eta,
        "retuned": not args.no_retune,
        "train_frac": args.train_frac,
        "seeds": seeds,
        "accuracy": {
            "values": accs,
            "mean": float(np.mean(accs)),
            "std": float(np.std(accs)),
        },
    })
    print(f"accuracy mean={np.mean(accs):.4f} std={np.std(accs):.4f} over {len(accs)} runs")
    return 0


def cmd_train_unsup(args):
    data = load_dataset(args.data)
    merged = _settings(args, GAN_PRESETS, (
        "latent_dim", "lr", "epochs", "d_steps", "adv_weight", "hidden_dims",
    ), GanConfig)
    if args.no_gan:
        merged["adv_weight"] = 0.0
    truth = None
    if args.eta > 0:
        truth = data
        masked = apply_missing_pattern(data, MissingSpec(args.eta, seed=args.seed))
    else:
        masked = data
        if args.truth:
            truth = load_dataset(args.truth)
    cfg = GanConfig(seed=args.seed, **merged)
    model = train_unsupervised(masked, cfg)
    result = gan_impute(model, masked, truth=truth)
    out = Path(args.out)
    ckpt = save_gan(model, out / "gan")
    imputed = save_dataset(result.completed, out / "imputed", name="dataset")
    payload = {
        "command": "train-unsup",
        "checkpoint": str(ckpt),
        "imputed": str(imputed),
        "config": cfg.to_dict(),
        "eta": args.eta,
        "final_reconstruction_loss": model.rec_trace[-1],
        "final_adversarial_loss": model.d_trace[-1],
    }
    if result.overall_nrmse is not None:
        payload["nrmse"] = {
            "per_view": result.per_view_nrmse,
            "overall": result.overall_nrmse,
        }
    if masked.labels is not None:
        clu = evaluate_clustering(model.latent.H, masked.labels, seed=args.seed)
        payload["clustering"] = {"acc": clu.acc, "nmi": clu.nmi}
    _write_report(out, payload)
    print(f"reconstruction loss {model.rec_trace[-1]:.6f}"
          + (f", overall nrmse {result.overall_nrmse:.6f}"
             if result.overall_nrmse is not None else ""))
    return 0


def cmd_impute(args):
    data = load_dataset(args.data)
    params = SvdParams(rank=args.rank, shrinkage=args.shrinkage)
    filled = impute_baseline(data, args.method, svd_params=params)
    out = Path(args.out)
    manifest = save_dataset(filled, out / "imputed", name="dataset")
    payload = {
        "command": "impute",
        "method": args.method,
        "imputed": str(manifest),
    }
    if args.truth:
        truth = load_dataset(args.truth)
        if (data.mask == 0).any():
            report = nrmse(filled.views, truth.views, data.mask == 0)
            payload["nrmse"] = report.to_dict()
    _write_report(out, payload)
    print(manifest)
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    data = load_dataset(args.data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = evaluate(model, data)
    _write_report(args.out, {
        "command": "eval",
        "model": str(args.model),
        "accuracy": report.accuracy,
        "per_class": [float(a) for a in report.per_class],
        "confusion": report.confusion.tolist(),
        "n": report.n,
    })
    print(f"accuracy {report.accuracy:.4f} on {report.n} samples")
    return 0


def _sweep_cell(data, method, eta, seed, sup_settings, gan_settings, train_frac):
    """One (method, eta, seed) run; returns rows of (metric, value)."""
    masked = data
    if eta > 0:
        masked = apply_missing_pattern(data, MissingSpec(eta, seed=seed))
    if method in ("sup", "sup-noretune"):
        cfg = TrainConfig(seed=seed, **sup_settings)
        tr, te = split(masked, train_frac, seed=seed)
        model = train(tr, cfg)
        if method == "sup":
            model = retune(model, tr)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = evaluate(model, te)
        return [("accuracy", report.accuracy)]
    if method in ("mean-nc", "mean-knn"):
        filled = impute_baseline(masked, GLOBAL_MEAN)
        tr, te = split(filled, train_frac, seed=seed)
        rule = "nearest_centroid" if method == "mean-nc" else "knn"
        report = concat_classify(tr, te, rule=rule, k=5)
        return [("accuracy", report.accuracy)]
    if method in ("unsup", "unsup-nogan"):
        settings = dict(gan_settings)
        if method == "unsup-nogan":
            settings["adv_weight"] = 0.0
        model = train_unsupervised(masked, GanConfig(seed=seed, **settings))
        result = gan_impute(model, masked, truth=data)
        rows = []
        if result.overall_nrmse is not None:
            rows.append(("nrmse", result.overall_nrmse))
        if masked.labels is not None:
            clu = evaluate_clustering(model.latent.H, masked.labels, seed=seed)
            rows += [("acc", clu.acc), ("nmi", clu.nmi)]
        return rows
    if method in ("mean-fill", "class-fill", "svd-fill"):
        kind = {"mean-fill": GLOBAL_MEAN, "class-fill": CLASS_MEAN, "svd-fill": SVD}[method]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            filled = impute_baseline(masked, kind)
        if not (masked.mask == 0).any():
            return []
        report = nrmse(filled.views, data.views, masked.mask == 0)
        return [("nrmse", report.overall)]
    raise ConfigurationError(f"unknown sweep method '{method}'")


def cmd_sweep(args):
    data = load_dataset(args.data)
    rates = _floats(args.rates)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in SWEEP_METHODS:
            raise ConfigurationError(
                f"unknown sweep method '{m}'; pick from {', '.join(SWEEP_METHODS)}")
    sup_settings = _settings(args, SUP_PRESETS, (), TrainConfig)
    gan_settings = _settings(args, GAN_PRESETS, (), GanConfig)
    if args.epochs is not None:
        sup_settings["epochs"] = args.epochs
        gan_settings["epochs"] = args.epochs
    cells = [
        (method, eta, args.seed + r)
        for method in methods for eta in rates for r in range(args.repeats)
    ]
    rows = []
    failures = []

    def run(cell):
        method, eta, seed = cell
        return cell, _sweep_cell(
            data, method, eta, seed, sup_settings, gan_settings, args.train_frac)

    workers = int(os.environ.get("PMVL_THREADS", "0")) or min(32, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for cell, outcome in pool.map(lambda c: _guarded(run, c), cells):
            method, eta, seed = cell
            if isinstance(outcome, Exception):
                failures.append((method, eta, seed, f"{type(outcome).__name__}: {outcome}"))
            else:
                rows += [(method, eta, seed, metric, value) for metric, value in outcome]
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    failures.sort(key=lambda r: (r[0], r[1], r[2]))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "eta", "seed", "metric", "value"])
        for method, eta, seed, metric, value in rows:
            writer.writerow([method, repr(float(eta)), seed, metric, f"{value:.17g}"])
    with (out / "failures.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "eta", "seed", "error"])
        writer.writerows(failures)
    _write_report(out, {
        "command": "sweep",
        "rates": rates,
        "methods": methods,
        "repeats": args.repeats,
        "rows": len(rows),
        "failures": len(failures),
        "csv": str(out / "sweep.csv"),
    })
    print(f"{len(rows)} rows, {len(failures)} failures -> {out / 'sweep.csv'}")
    return 0


def _guarded(fn, cell):
    try:
        return fn(cell)
    except Exception as exc:  # cell failures land in failures.csv, run continues
        return cell, exc


def _add_common(p, preset=True):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    if preset:
        p.add_argument("--preset", choices=sorted(SUP_PRESETS), default="synthetic")
        p.add_argument("--config", help="JSON file with config overrides")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pmvl",
        description="Partial multi-view learning: train, impute, evaluate, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic multi-view dataset")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--zdim", type=int, default=8)
    p.add_argument("--view-dims", default="20,16,12")
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--center-scale", type=float, default=4.0)
    p.add_argument("--nuisance", type=float, default=0.0)
    _add_common(p, preset=False)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("mask", help="hide view slots at a target missing rate")
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--eta", type=float, required=True)
    _add_common(p, preset=False)
    p.set_defaults(fn=cmd_mask)

    p = sub.add_parser("train-sup", help="train the supervised model and report accuracy")
    p.add_argument("--data", required=True)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--latent-dim", dest="latent_dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr-nets", dest="lr_nets", type=float)
    p.add_argument("--lr-latent", dest="lr_latent", type=float)
    p.add_argument("--infer-iters", dest="infer_iters", type=int)
    p.add_argument("--infer-lr", dest="infer_lr", type=float)
    p.add_argument("--hidden-dims", dest="hidden_dims")
    p.add_argument("--train-frac", dest="train_frac", type=float, default=0.7)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--no-retune", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_train_sup)

    p = sub.add_parser("train-unsup", help="adversarial imputation training")
    p.add_argument("--data", required=True)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--truth", help="pre-masking dataset manifest, for NRMSE")
    p.add_argument("--latent-dim", dest="latent_dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--d-steps", dest="d_steps", type=int)
    p.add_argument("--adv-weight", dest="adv_weight", type=float)
    p.add_argument("--hidden-dims", dest="hidden_dims")
    p.add_argument("--no-gan", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_train_unsup)

    p = sub.add_parser("impute", help="fill missing slots with a baseline imputer")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=[GLOBAL_MEAN, CLASS_MEAN, SVD], default=GLOBAL_MEAN)
    p.add_argument("--rank", type=int)
    p.add_argument("--shrinkage", type=float)
    p.add_argument("--truth")
    _add_common(p, preset=False)
    p.set_defaults(fn=cmd_impute)

    p = sub.add_parser("eval", help="evaluate a supervised checkpoint on a dataset")
    p.add_argument("--model", required=True, help="checkpoint directory or manifest")
    p.add_argument("--data", required=True)
    _add_common(p, preset=False)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="missing-rate grid over methods, long-format CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--rates", default="0,0.1,0.2,0.3,0.4,0.5")
    p.add_argument("--methods", default="sup,mean-nc")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--epochs", type=int, help="override training epochs for every method")
    p.add_argument("--train-frac", dest="train_frac", type=float, default=0.7)
    _add_common(p)
    p.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PmvlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
