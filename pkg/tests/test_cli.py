"""End-to-end checks of the command line: every command, tiny budgets."""

import json
from pathlib import Path

import numpy as np
import pytest

from pmvl import cli
from pmvl.data import MultiViewDataset, load_dataset, save_dataset
from pmvl.supervised import load_model


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def complete_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("complete")
    rc = run_cli("synth", "--n", 48, "--classes", 3, "--zdim", 4,
                 "--view-dims", "6,5", "--noise", 0.05, "--nuisance", 1.0,
                 "--seed", 11, "--out", out)
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def masked_dir(tmp_path_factory, complete_dir):
    out = tmp_path_factory.mktemp("masked")
    rc = run_cli("mask", "--data", complete_dir / "dataset.json",
                 "--eta", 0.4, "--seed", 11, "--out", out)
    assert rc == 0
    return out


def report_of(out_dir):
    payload = json.loads((Path(out_dir) / "report.json").read_text())
    assert "timestamp" in payload
    return payload


def test_synth_writes_dataset_and_report(complete_dir):
    data = load_dataset(complete_dir / "dataset.json")
    assert data.n_samples == 48
    assert data.view_dims == [6, 5]
    assert (data.mask == 1).all()
    rep = report_of(complete_dir)
    assert rep["command"] == "synth"
    assert rep["classes"] == 3


def test_mask_hits_requested_rate(masked_dir):
    data = load_dataset(masked_dir / "dataset.json")
    rep = report_of(masked_dir)
    zeros = (data.mask == 0).sum()
    assert rep["requested_rate"] == 0.4
    assert abs(rep["measured_rate"] - 0.4) < 0.02
    assert zeros > 0
    assert data.mask.sum(axis=1).min() >= 1


def test_train_sup_reports_accuracy_and_checkpoint(complete_dir, tmp_path):
    out = tmp_path / "sup"
    rc = run_cli("train-sup", "--data", complete_dir / "dataset.json",
                 "--eta", 0.3, "--epochs", 40, "--repeats", 2,
                 "--latent-dim", 6, "--hidden-dims", "8",
                 "--lr-nets", 0.05, "--lr-latent", 0.02,
                 "--seed", 1, "--out", out)
    assert rc == 0
    rep = report_of(out)
    acc = rep["accuracy"]
    assert len(acc["values"]) == 2
    assert acc["mean"] == pytest.approx(np.mean(acc["values"]))
    assert rep["retuned"] is True
    assert rep["seeds"] == [1, 2]
    model = load_model(rep["checkpoint"])
    assert model.config.latent_dim == 6
    assert model.retuned_nets is not None


def test_train_sup_no_retune_flag(complete_dir, tmp_path):
    out = tmp_path / "nr"
    rc = run_cli("train-sup", "--data", complete_dir / "dataset.json",
                 "--epochs", 30, "--repeats", 1, "--latent-dim", 6,
                 "--hidden-dims", "8", "--no-retune", "--seed", 4, "--out", out)
    assert rc == 0
    rep = report_of(out)
    assert rep["retuned"] is False
    assert load_model(rep["checkpoint"]).retuned_nets is None


def test_eval_command_on_saved_model(complete_dir, masked_dir, tmp_path):
    sup = tmp_path / "sup"
    rc = run_cli("train-sup", "--data", complete_dir / "dataset.json",
                 "--epochs", 40, "--repeats", 1, "--latent-dim", 6,
                 "--hidden-dims", "8", "--seed", 2, "--out", sup)
    assert rc == 0
    out = tmp_path / "ev"
    rc = run_cli("eval", "--model", sup / "model",
                 "--data", masked_dir / "dataset.json", "--out", out)
    assert rc == 0
    rep = report_of(out)
    assert 0.0 <= rep["accuracy"] <= 1.0
    assert rep["n"] == 48
    assert len(rep["confusion"]) == 3


def test_train_unsup_imputes_and_reports(complete_dir, masked_dir, tmp_path):
    out = tmp_path / "gan"
    rc = run_cli("train-unsup", "--data", masked_dir / "dataset.json",
                 "--truth", complete_dir / "dataset.json",
                 "--epochs", 30, "--latent-dim", 5, "--hidden-dims", "8",
                 "--seed", 3, "--out", out)
    assert rc == 0
    rep = report_of(out)
    assert rep["nrmse"]["overall"] > 0
    assert len(rep["nrmse"]["per_view"]) == 2
    assert "acc" in rep["clustering"]
    filled = load_dataset(rep["imputed"])
    assert (filled.mask == 1).all()
    masked = load_dataset(masked_dir / "dataset.json")
    keep = masked.mask[:, 0].astype(bool)
    assert np.array_equal(filled.views[0][keep], masked.views[0][keep])


def test_train_unsup_no_gan_flag(masked_dir, tmp_path):
    out = tmp_path / "nogan"
    rc = run_cli("train-unsup", "--data", masked_dir / "dataset.json",
                 "--epochs", 20, "--latent-dim", 5, "--hidden-dims", "8",
                 "--no-gan", "--seed", 3, "--out", out)
    assert rc == 0
    rep = report_of(out)
    assert rep["config"]["adv_weight"] == 0.0


def test_train_unsup_internal_masking(complete_dir, tmp_path):
    out = tmp_path / "selfmask"
    rc = run_cli("train-unsup", "--data", complete_dir / "dataset.json",
                 "--eta", 0.3, "--epochs", 20, "--latent-dim", 5,
                 "--hidden-dims", "8", "--seed", 5, "--out", out)
    assert rc == 0
    rep = report_of(out)
    # masked internally against the loaded data, so NRMSE is measurable
    assert rep["nrmse"]["overall"] > 0


def test_impute_command_with_truth(complete_dir, masked_dir, tmp_path):
    out = tmp_path / "imp"
    rc = run_cli("impute", "--data", masked_dir / "dataset.json",
                 "--method", "class_mean",
                 "--truth", complete_dir / "dataset.json", "--out", out)
    assert rc == 0
    rep = report_of(out)
    assert rep["method"] == "class_mean"
    assert rep["nrmse"]["overall"] > 0
    filled = load_dataset(rep["imputed"])
    assert (filled.mask == 1).all()


def test_sweep_csv_shape_and_order(complete_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("PMVL_THREADS", "2")
    out = tmp_path / "sw"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"latent_dim": 6, "hidden_dims": [8]}))
    rc = run_cli("sweep", "--data", complete_dir / "dataset.json",
                 "--rates", "0,0.4", "--methods", "sup-noretune,mean-fill",
                 "--repeats", 2, "--epochs", 30, "--config", cfg,
                 "--seed", 7, "--out", out)
    assert rc == 0
    lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "method,eta,seed,metric,value"
    rows = [ln.split(",") for ln in lines[1:]]
    # mean-fill yields no rows at eta=0 (nothing missing): 4 acc + 2 nrmse
    assert len(rows) == 6
    assert rows == sorted(rows)
    assert (out / "failures.csv").read_text().strip() == "method,eta,seed,error"


def test_sweep_records_cell_failures_and_continues(tmp_path, monkeypatch):
    monkeypatch.setenv("PMVL_THREADS", "1")
    rng = np.random.default_rng(0)
    unlabeled = MultiViewDataset(
        [rng.normal(size=(30, 4)), rng.normal(size=(30, 3))],
        np.ones((30, 2), dtype=np.int64))
    manifest = save_dataset(unlabeled, tmp_path / "data", name="dataset")
    out = tmp_path / "sw"
    rc = run_cli("sweep", "--data", manifest, "--rates", "0.4",
                 "--methods", "class-fill,mean-fill", "--repeats", 2,
                 "--seed", 0, "--out", out)
    assert rc == 0
    failures = (out / "failures.csv").read_text().strip().splitlines()
    assert len(failures) == 3  # header + one per class-fill cell
    assert all("class-fill" in ln for ln in failures[1:])
    rows = (out / "sweep.csv").read_text().strip().splitlines()
    assert len(rows) == 3  # mean-fill cells still ran
    rep = report_of(out)
    assert rep["failures"] == 2 and rep["rows"] == 2


def test_sweep_unknown_method_exits_2(complete_dir, tmp_path, capsys):
    rc = run_cli("sweep", "--data", complete_dir / "dataset.json",
                 "--methods", "sup,bogus", "--out", tmp_path / "x")
    assert rc == 2
    assert "bogus" in capsys.readouterr().err


def test_mask_bad_rate_exits_2(complete_dir, tmp_path, capsys):
    rc = run_cli("mask", "--data", complete_dir / "dataset.json",
                 "--eta", 1.5, "--out", tmp_path / "x")
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_missing_input_exits_3(tmp_path, capsys):
    rc = run_cli("eval", "--model", tmp_path / "nope",
                 "--data", tmp_path / "nope.json", "--out", tmp_path / "x")
    assert rc == 3
    assert "io error:" in capsys.readouterr().err


def test_reports_byte_identical_for_identical_args(complete_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("PMVL_THREADS", "2")
    out = tmp_path / "sw"
    argv = ["sweep", "--data", complete_dir / "dataset.json",
            "--rates", "0.4", "--methods", "mean-fill,class-fill",
            "--repeats", 3, "--seed", 9, "--out", out]
    assert run_cli(*argv) == 0
    first_csv = (out / "sweep.csv").read_bytes()
    first_rep = json.loads((out / "report.json").read_text())
    monkeypatch.setenv("PMVL_THREADS", "4")
    assert run_cli(*argv) == 0
    assert (out / "sweep.csv").read_bytes() == first_csv
    second_rep = json.loads((out / "report.json").read_text())
    first_rep.pop("timestamp"), second_rep.pop("timestamp")
    assert first_rep == second_rep


def test_config_file_overridden_by_flags(complete_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"latent_dim": 4, "epochs": 500,
                               "hidden_dims": [8], "lam": 2.0}))
    out = tmp_path / "sup"
    rc = run_cli("train-sup", "--data", complete_dir / "dataset.json",
                 "--config", cfg, "--epochs", 25, "--repeats", 1,
                 "--seed", 6, "--out", out)
    assert rc == 0
    rep = report_of(out)
    assert rep["config"]["epochs"] == 25       # flag beats config file
    assert rep["config"]["latent_dim"] == 4    # config file beats preset
    assert rep["config"]["lam"] == 2.0


def test_preset_supplies_defaults(complete_dir, tmp_path):
    out = tmp_path / "sup"
    rc = run_cli("train-sup", "--data", complete_dir / "dataset.json",
                 "--preset", "cub", "--epochs", 20, "--repeats", 1,
                 "--latent-dim", 6, "--seed", 8, "--out", out)
    assert rc == 0
    rep = report_of(out)
    assert rep["config"]["hidden_dims"] == []  # cub preset trains linear nets
    assert rep["config"]["lr_nets"] == 0.01
