"""Acceptance gate: the eleven primary criteria, one test each.

Every test prints a single PASS/FAIL line (bypassing capture) before
asserting, so a full run leaves an auditable checklist.
"""

import time

import numpy as np
import pytest

from kicksense import nn
from kicksense.data import build_dataset, export_dataset, ingest_manifest
from kicksense.evaluate import (
    build_stream_run,
    evaluate_classifier,
    streaming_recognition,
)
from kicksense.flowsim import SimConfig
from kicksense.kinematics import pattern_set
from kicksense.models import ModelHyperparams, build_model, prepare_inputs
from kicksense.signal import hamming_window, spectrogram, stft
from kicksense.training import TrainSettings, train_classifier

from conftest import ACCEPTANCE_SEEDS, mean_metric


def _report(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {detail}")
    return ok


# --------------------------------------------------------------------------
# 1. STFT against an independent DFT oracle


def dft_matrix_oracle(frame):
    """Direct DFT by explicit matrix product (no FFT algorithm)."""
    n = len(frame)
    k = np.arange(n // 2 + 1)[:, None]
    j = np.arange(n)[None, :]
    return (np.exp(-2j * np.pi * k * j / n) @ frame.astype(complex))


def test_criterion_01_stft_matches_oracle(capsys):
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    worst = 0.0
    taper = hamming_window(32)
    power_exact = True
    for _ in range(100):
        n = int(rng.integers(32, 101))
        x = rng.normal(size=n)
        coeffs, _, _ = stft(x, segment=32, hop=1)
        for m in range(coeffs.shape[0]):
            oracle = dft_matrix_oracle(x[m : m + 32] * taper)
            num = np.abs(coeffs[m] - oracle).max()
            den = max(np.abs(oracle).max(), 1e-12)
            worst = max(worst, num / den)
        spec = spectrogram(np.tile(x[:, None], (1, 3)))
        power_exact = power_exact and all(
            np.array_equal(spec.power[s], np.abs(coeffs) ** 2) for s in range(3)
        )
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and power_exact and elapsed < 5.0
    assert _report(capsys, 1, ok,
                   f"STFT vs direct-DFT oracle: worst rel err {worst:.2e} "
                   f"(<1e-9), power=|X|^2 exact: {power_exact}, {elapsed:.1f}s (<5s)")


# --------------------------------------------------------------------------
# 2. Finite-difference gradient checks for every layer


def test_criterion_02_gradient_checks_all_layers(capsys):
    t0 = time.perf_counter()
    rng_data = np.random.default_rng(0)
    cases = [
        ("dense", nn.Dense(9, 7, activation="relu", rng=np.random.default_rng(1)),
         rng_data.normal(size=(4, 9))),
        ("conv1d", nn.Conv1D(3, 5, 5, stride=2, padding="same", activation="relu",
                             rng=np.random.default_rng(2)), rng_data.normal(size=(3, 3, 20))),
        ("conv2d", nn.Conv2D(2, 4, 3, stride=2, padding="valid", activation="relu",
                             rng=np.random.default_rng(3)), rng_data.normal(size=(2, 2, 11, 9))),
        ("bilstm", nn.BiLSTM(4, 5, rng=np.random.default_rng(4)),
         rng_data.normal(size=(2, 6, 4))),
        ("attention", nn.AttentionFusion(10, rng=np.random.default_rng(5)),
         rng_data.normal(size=(4, 10))),
        ("head", nn.Dense(12, 6, activation="linear", rng=np.random.default_rng(6)),
         rng_data.normal(size=(4, 12))),
    ]
    worst = 0.0
    checked = 0
    for name, layer, x in cases:
        out = layer.forward(x)
        weights = np.sin(np.arange(out.size)).reshape(out.shape)

        def loss_fn(layer=layer, x=x, weights=weights):
            return float(np.sum(layer.forward(x) * weights))

        layer.zero_grad()
        layer.forward(x)
        layer.backward(weights)
        results = nn.finite_difference_check(loss_fn, layer.params(), eps=1e-5,
                                             coords_per_param=20,
                                             rng=np.random.default_rng(6))
        checked += len(results)
        worst = max(worst, nn.max_rel_error(results))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and checked >= 120 and elapsed < 60.0
    assert _report(capsys, 2, ok,
                   f"gradients vs central differences on {checked} coordinates "
                   f"across 6 layer types incl. task head: worst rel err "
                   f"{worst:.2e} (<1e-4), {elapsed:.1f}s (<60s)")


# --------------------------------------------------------------------------
# 3. Attention weights form a probability simplex


def test_criterion_03_attention_simplex(capsys):
    layer = nn.AttentionFusion(128, rng=np.random.default_rng(7))
    rng = np.random.default_rng(8)
    x = rng.normal(scale=rng.uniform(0.1, 30.0, size=(1000, 1)), size=(1000, 128))
    omega = layer.attention_weights(x)
    sums = omega.sum(axis=1)
    worst = float(np.abs(sums - 1.0).max())
    positive = bool(np.all(omega > 0.0))
    ok = worst <= 1e-6 and positive
    assert _report(capsys, 3, ok,
                   f"attention weights on 1000 inputs: max |sum-1| {worst:.2e} "
                   f"(<=1e-6), all strictly positive: {positive}")


# --------------------------------------------------------------------------
# 4. Overfit a small noise-free two-pattern subset


def test_criterion_04_overfit_two_patterns(capsys):
    t0 = time.perf_counter()
    quiet = SimConfig(noise_std_pa=0.0, seed=41)
    ds = build_dataset(config=quiet, l_y_levels=(40.0,), repetitions=2, stride=9)
    mask = np.isin(ds.labels, (0, 1))
    idx = np.nonzero(mask)[0][:200]
    subset = ds.subset(idx)
    assert len(subset) == 200
    model = build_model("fusion", "classification", ModelHyperparams(), seed=0)
    settings = TrainSettings(epochs=30, batch_size=32, seed=0)
    result = train_classifier(model, subset, settings=settings)
    ev = evaluate_classifier(model, subset, settings.standardize_mode)
    best = max([r["train_acc"] for r in result.history] + [ev.accuracy])
    elapsed = time.perf_counter() - t0
    ok = best == 1.0 and elapsed < 120.0
    assert _report(capsys, 4, ok,
                   f"noise-free 200-window two-pattern subset: train acc reaches "
                   f"{best:.3f} (=1.0) within 30 epochs, {elapsed:.0f}s (<2min)")


# --------------------------------------------------------------------------
# 5. Fusion accuracy on the default dataset across seeds


def test_criterion_05_fusion_accuracy(capsys, classification_nn_suite):
    suite, wall = classification_nn_suite
    per_seed = suite.metric_table("test_accuracy")["fusion"]
    fusion = mean_metric(suite, "fusion", "test_accuracy")
    time_b = mean_metric(suite, "time", "test_accuracy")
    freq_b = mean_metric(suite, "freq", "test_accuracy")
    ok = fusion >= 0.90 and fusion >= max(time_b, freq_b) - 0.01 and wall < 1800.0
    seeds_str = "/".join(f"{v:.4f}" for v in per_seed)
    assert _report(capsys, 5, ok,
                   f"fusion test acc {fusion:.4f} (>=0.90; seeds {seeds_str}) vs "
                   f"branches time {time_b:.4f} / freq {freq_b:.4f} (>= max-1pp), "
                   f"suite wall {wall/60:.1f} min (<30)")


# --------------------------------------------------------------------------
# 6. Lateral error grows with longitudinal distance


def test_criterion_06_lateral_error_grows_with_distance(capsys, localization_suite):
    reports = [rec.metrics["report"] for rec in localization_suite.records if rec.kind == "fusion"]
    near = float(np.mean([r.per_ly[20.0][0] for r in reports]))
    far = float(np.mean([r.per_ly[200.0][0] for r in reports]))
    ok = far > near
    assert _report(capsys, 6, ok,
                   f"L_x RMSE at L_y=200mm {far:.1f}mm > at L_y=20mm {near:.1f}mm "
                   f"(mean of {len(reports)} seeds)")


# --------------------------------------------------------------------------
# 7. Faster kicks localize better in depth


def test_criterion_07_fast_kicks_better_depth(capsys, localization_suite):
    reports = [rec.metrics["report"] for rec in localization_suite.records if rec.kind == "fusion"]
    one_hz = float(np.mean([np.mean([r.per_pattern[p][1] for p in ("s1", "s2")]) for r in reports]))
    two_hz = float(np.mean([np.mean([r.per_pattern[p][1] for p in ("s5", "s6")]) for r in reports]))
    ok = two_hz < one_hz
    assert _report(capsys, 7, ok,
                   f"L_y RMSE 2Hz patterns {two_hz:.1f}mm < 1Hz patterns {one_hz:.1f}mm "
                   f"(mean of {len(reports)} seeds)")


# --------------------------------------------------------------------------
# 8. Fusion beats both hand-feature baselines on both tasks


def test_criterion_08_fusion_beats_baselines(capsys, classification_nn_suite,
                                             classification_baseline_suite, localization_suite):
    suite, _ = classification_nn_suite
    acc_fusion = mean_metric(suite, "fusion", "test_accuracy")
    acc_fft = mean_metric(classification_baseline_suite, "fft_mlp", "test_accuracy")
    acc_stats = mean_metric(classification_baseline_suite, "stats_mlp", "test_accuracy")
    rx = {k: mean_metric(localization_suite, k, "rmse_x_mm") for k in ("fusion", "fft_mlp", "stats_mlp")}
    ry = {k: mean_metric(localization_suite, k, "rmse_y_mm") for k in ("fusion", "fft_mlp", "stats_mlp")}
    ok = (
        acc_fusion > acc_fft
        and acc_fusion > acc_stats
        and rx["fusion"] < rx["fft_mlp"]
        and rx["fusion"] < rx["stats_mlp"]
        and ry["fusion"] < ry["fft_mlp"]
        and ry["fusion"] < ry["stats_mlp"]
    )
    assert _report(capsys, 8, ok,
                   f"fusion acc {acc_fusion:.4f} > fft {acc_fft:.4f}, stats {acc_stats:.4f}; "
                   f"rmse_x {rx['fusion']:.1f} < fft {rx['fft_mlp']:.1f}/stats {rx['stats_mlp']:.1f}; "
                   f"rmse_y {ry['fusion']:.1f} < fft {ry['fft_mlp']:.1f}/stats {ry['stats_mlp']:.1f}")


# --------------------------------------------------------------------------
# 9. Changing-pattern streams recognised within five seconds


def test_criterion_09_streaming_transients(capsys, default_sim_config, default_settings,
                                           trained_fusion_classifier):
    run = build_stream_run(config=default_sim_config, seed=9001)
    result = streaming_recognition(trained_fusion_classifier, run,
                                   default_settings.standardize_mode)
    worst = result.max_transient_s()
    ok = len(result.transients_s) == 6 and worst <= 5.0
    detail = ", ".join(f"{d:.2f}" for d in result.transients_s)
    assert _report(capsys, 9, ok,
                   f"six pattern switches recognised in [{detail}] s (all <=5s)")


# --------------------------------------------------------------------------
# 10. Bit-identical rerun reproducibility


def test_criterion_10_bit_identical_reruns(capsys, tmp_path, default_splits):
    from dataclasses import replace

    from kicksense.config import ExperimentConfig, dump_config, load_config
    from kicksense.training import save_model

    snapshot = tmp_path / "experiment.ini"
    cfg = ExperimentConfig(train=TrainSettings(epochs=2, seed=3))
    snapshot.write_text(dump_config(cfg), encoding="utf-8")

    sub = default_splits["train"].subset(np.arange(0, 4000, 2))
    val = default_splits["val"].subset(np.arange(0, 2000, 2))
    ckpt_blobs, report_blobs = [], []
    for i in range(2):
        settings = load_config(snapshot).train
        model = build_model("fusion", "classification", ModelHyperparams(),
                            seed=settings.seed)
        train_classifier(model, sub, settings=settings)
        ckpt = tmp_path / f"rerun{i}.ckpt"
        save_model(ckpt, model, settings)
        ckpt_blobs.append(ckpt.read_bytes())
        report = tmp_path / f"rerun{i}_confusion.csv"
        evaluate_classifier(model, val, settings.standardize_mode).confusion.write_csv(report)
        report_blobs.append(report.read_bytes())
    ok = ckpt_blobs[0] == ckpt_blobs[1] and report_blobs[0] == report_blobs[1]
    assert _report(capsys, 10, ok,
                   f"config-snapshot reruns -> identical checkpoints "
                   f"({len(ckpt_blobs[0])} bytes) and identical evaluation "
                   f"reports ({len(report_blobs[0])} bytes): {ok}")


# --------------------------------------------------------------------------
# 11. Simulate -> CSV -> ingest equals the in-memory dataset


def test_criterion_11_csv_round_trip_full_matrix(capsys, tmp_path_factory,
                                                 default_sim_config, default_dataset):
    out = tmp_path_factory.mktemp("full_export")
    manifest = export_dataset(out, config=default_sim_config)
    loaded = ingest_manifest(out)
    direct = default_dataset
    ok = (
        len(manifest["runs"]) == 600
        and len(loaded) == len(direct)
        and np.array_equal(loaded.windows, direct.windows)
        and np.array_equal(loaded.labels, direct.labels)
        and np.array_equal(loaded.l_x_mm, direct.l_x_mm)
        and np.array_equal(loaded.l_y_mm, direct.l_y_mm)
        and np.array_equal(loaded.reps, direct.reps)
    )
    assert _report(capsys, 11, ok,
                   f"600-run matrix exported ({len(manifest['runs'])} files), re-ingested "
                   f"dataset of {len(loaded)} windows identical to in-memory build: {ok}")


def test_pattern_set_is_complete():
    """Sanity companion: the six patterns the criteria rely on exist."""
    assert len(pattern_set()) == 6
