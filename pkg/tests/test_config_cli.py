"""Configuration round-trip and the command-line workflow."""

import os

import numpy as np
import pytest

from kicksense.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from kicksense.config import ExperimentConfig, dump_config, load_config
from kicksense.flowsim import ConfigurationError


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig()
    path = tmp_path / "exp.ini"
    path.write_text(dump_config(cfg))
    loaded = load_config(path)
    assert loaded == cfg


def test_config_overrides(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(
        "[experiment]\nstride = 10\nsplit_seed = 77\n"
        "[simulation]\nnoise_std_pa = 0.5\nseed = 99\n"
        "[training]\nepochs = 3\nstandardize_mode = shared\n"
    )
    cfg = load_config(path)
    assert cfg.stride == 10
    assert cfg.split_seed == 77
    assert cfg.sim.noise_std_pa == 0.5
    assert cfg.sim.seed == 99
    assert cfg.train.epochs == 3
    assert cfg.train.standardize_mode == "shared"


def test_config_rejects_unknown_and_invalid(tmp_path):
    bad_key = tmp_path / "a.ini"
    bad_key.write_text("[simulation]\nwarp_factor = 9\n")
    with pytest.raises(ConfigurationError, match="warp_factor"):
        load_config(bad_key)

    bad_value = tmp_path / "b.ini"
    bad_value.write_text("[training]\nepochs = soon\n")
    with pytest.raises(ConfigurationError, match="epochs"):
        load_config(bad_value)

    bad_section = tmp_path / "c.ini"
    bad_section.write_text("[mystery]\nx = 1\n")
    with pytest.raises(ConfigurationError, match="mystery"):
        load_config(bad_section)

    bad_sim = tmp_path / "d.ini"
    bad_sim.write_text("[simulation]\nsample_rate_hz = -5\n")
    with pytest.raises(ConfigurationError):
        load_config(bad_sim)

    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.ini")


def test_output_root_env_override(monkeypatch):
    cfg = ExperimentConfig()
    assert cfg.resolved_output_root() == "runs"
    monkeypatch.setenv("KICKSENSE_OUTPUT_ROOT", "/tmp/elsewhere")
    assert cfg.resolved_output_root() == "/tmp/elsewhere"


@pytest.fixture(scope="module")
def tiny_config(tmp_path_factory):
    """Small-but-trainable configuration for CLI end-to-end checks."""
    root = tmp_path_factory.mktemp("cli")
    path = root / "tiny.ini"
    path.write_text(
        "[simulation]\nseed = 23\nnoise_std_pa = 1.0\n"
        "[experiment]\nstride = 50\nrepetitions = 10\n"
        "[training]\nepochs = 2\nsteps = 30\nbatch_size = 64\nmax_steps_per_epoch = 10\n"
    )
    return root, path


@pytest.fixture(scope="module")
def cli_dataset(tiny_config):
    root, cfg_path = tiny_config
    data_dir = root / "data"
    code = main(["simulate", "--config", str(cfg_path), "--out", str(data_dir), "--plots"])
    assert code == EXIT_OK
    return data_dir


def test_cli_simulate_writes_runs_and_figures(cli_dataset):
    files = os.listdir(cli_dataset)
    assert "manifest.json" in files
    assert sum(f.endswith(".csv") for f in files) == 600
    figs = os.listdir(cli_dataset / "figures")
    assert "run_overview.png" in figs
    assert "example_spectrogram.png" in figs


def test_cli_train_eval_classification(tiny_config, cli_dataset, capsys):
    root, cfg_path = tiny_config
    ckpt = root / "time.ckpt"
    code = main([
        "train", "--config", str(cfg_path), "--data", str(cli_dataset),
        "--kind", "time", "--task", "classification", "--checkpoint", str(ckpt),
    ])
    assert code == EXIT_OK
    assert ckpt.exists()
    assert (root / "history.csv").exists()
    assert (root / "history.png").exists()

    report = root / "report"
    code = main([
        "eval", "--config", str(cfg_path), "--data", str(cli_dataset),
        "--checkpoint", str(ckpt), "--report", str(report),
    ])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "accuracy" in out
    for artifact in ("confusion.csv", "confusion.png", "summary.json"):
        assert (report / artifact).exists()


def test_cli_train_eval_localization(tiny_config, cli_dataset):
    root, cfg_path = tiny_config
    ckpt = root / "loc.ckpt"
    code = main([
        "train", "--config", str(cfg_path), "--data", str(cli_dataset),
        "--kind", "stats_mlp", "--task", "localization", "--checkpoint", str(ckpt),
        "--steps", "30",
    ])
    assert code == EXIT_OK
    report = root / "loc_report"
    code = main([
        "eval", "--config", str(cfg_path), "--data", str(cli_dataset),
        "--checkpoint", str(ckpt), "--report", str(report),
    ])
    assert code == EXIT_OK
    for artifact in ("rmse.csv", "rmse_by_pattern.png", "rmse_by_ly.png", "summary.json"):
        assert (report / artifact).exists()


def test_cli_stream(tiny_config, cli_dataset, capsys):
    root, cfg_path = tiny_config
    ckpt = root / "time.ckpt"
    if not ckpt.exists():
        assert main([
            "train", "--config", str(cfg_path), "--data", str(cli_dataset),
            "--kind", "time", "--checkpoint", str(ckpt),
        ]) == EXIT_OK
    report = root / "stream_report"
    code = main(["stream", "--config", str(cfg_path), "--checkpoint", str(ckpt),
                 "--report", str(report)])
    assert code == EXIT_OK
    assert (report / "stream.csv").exists()
    assert (report / "stream.png").exists()
    assert "transient" in capsys.readouterr().out


def test_cli_ablate_smoke(tiny_config, cli_dataset, capsys):
    root, cfg_path = tiny_config
    report = root / "ablate_report"
    code = main([
        "ablate", "--config", str(cfg_path), "--data", str(cli_dataset),
        "--kinds", "fft_mlp,stats_mlp", "--seeds", "0,1", "--epochs", "1",
        "--report", str(report),
    ])
    assert code == EXIT_OK
    assert (report / "ablation.csv").exists()
    assert (report / "ablation.png").exists()
    assert (report / "ablation.json").exists()
    assert "fft_mlp" in capsys.readouterr().out


def test_cli_print_config(tiny_config, capsys):
    _, cfg_path = tiny_config
    assert main(["print-config", "--config", str(cfg_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[simulation]" in out
    assert "noise_std_pa = 1.0" in out


def test_cli_exit_codes(tmp_path, capsys):
    # config error: malformed config file
    bad = tmp_path / "bad.ini"
    bad.write_text("[simulation]\nnoise_std_pa = loud\n")
    assert main(["print-config", "--config", str(bad)]) == EXIT_CONFIG

    # i/o error: missing config
    assert main(["print-config", "--config", str(tmp_path / "nope.ini")]) == EXIT_IO

    # validation error: data directory without a manifest
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["train", "--data", str(empty), "--checkpoint", str(tmp_path / "x.ckpt")]) \
        == EXIT_VALIDATION

    # argparse usage error maps to the config exit code
    assert main(["train"]) == EXIT_CONFIG
    capsys.readouterr()


def test_cli_eval_missing_checkpoint(cli_dataset, tmp_path, capsys):
    code = main(["eval", "--data", str(cli_dataset),
                 "--checkpoint", str(tmp_path / "ghost.ckpt"),
                 "--report", str(tmp_path / "r")])
    assert code == EXIT_IO
    capsys.readouterr()
