"""Figure rendering for reports. All figures go straight to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .kinematics import PATTERN_IDS

_DPI = 130


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_run_overview(run, path, max_seconds: float | None = None):
    """Pressure traces of one run with the rest/motion boundary marked."""
    fig, axes = plt.subplots(run.pressures.shape[1], 1, sharex=True, figsize=(9, 6))
    t = run.t
    stop = len(t) if max_seconds is None else int(np.searchsorted(t, max_seconds))
    for s, ax in enumerate(np.atleast_1d(axes)):
        ax.plot(t[:stop], run.pressures[:stop, s], lw=0.6)
        ax.axvline(run.t[run.rest_samples], color="tab:red", ls="--", lw=0.8)
        ax.set_ylabel(f"p{s + 1} [Pa]")
    np.atleast_1d(axes)[-1].set_xlabel("time [s]")
    fig.suptitle(f"run seed={run.seed} pattern={run.pattern_ids[-1]}")
    return _finish(fig, path)


def save_spectrogram(spec, path, sensor: int = 0):
    fig, ax = plt.subplots(figsize=(7, 4))
    img = ax.imshow(
        np.log1p(spec.power[sensor]).T,
        origin="lower",
        aspect="auto",
        extent=[spec.frame_times[0], spec.frame_times[-1], spec.freqs_hz[0], spec.freqs_hz[-1]],
    )
    fig.colorbar(img, ax=ax, label="log(1 + power)")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("frequency [Hz]")
    ax.set_title(f"sensor {sensor + 1} power spectrogram")
    return _finish(fig, path)


def save_confusion_heatmap(confusion, path, title: str = "pattern confusion"):
    fig, ax = plt.subplots(figsize=(5.5, 5))
    counts = confusion.counts
    img = ax.imshow(counts, cmap="Blues")
    fig.colorbar(img, ax=ax, label="windows")
    ticks = np.arange(len(confusion.class_ids))
    ax.set_xticks(ticks, confusion.class_ids)
    ax.set_yticks(ticks, confusion.class_ids)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    thresh = counts.max() / 2 if counts.max() else 0.5
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            ax.text(j, i, str(int(counts[i, j])), ha="center", va="center",
                    color="white" if counts[i, j] > thresh else "black", fontsize=8)
    ax.set_title(f"{title} (acc={confusion.accuracy():.3f})")
    return _finish(fig, path)


def save_rmse_by_pattern(report, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    pids = [p for p in PATTERN_IDS if p in report.per_pattern]
    x = np.arange(len(pids))
    rx = [report.per_pattern[p][0] for p in pids]
    ry = [report.per_pattern[p][1] for p in pids]
    ax.bar(x - 0.2, rx, width=0.4, label="lateral (L_x)")
    ax.bar(x + 0.2, ry, width=0.4, label="longitudinal (L_y)")
    ax.set_xticks(x, pids)
    ax.set_ylabel("RMSE [mm]")
    ax.set_title("localization error by pattern")
    ax.legend()
    return _finish(fig, path)


def save_rmse_by_ly(report, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    levels = sorted(report.per_ly)
    ax.plot(levels, [report.per_ly[v][0] for v in levels], "o-", label="lateral (L_x)")
    ax.plot(levels, [report.per_ly[v][1] for v in levels], "s-", label="longitudinal (L_y)")
    ax.set_xlabel("true L_y [mm]")
    ax.set_ylabel("RMSE [mm]")
    ax.set_title("localization error vs longitudinal distance")
    ax.legend()
    return _finish(fig, path)


def save_history(history, path, title: str = "training"):
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = [rec.get("epoch", rec.get("step", i)) for i, rec in enumerate(history)]
    ax.plot(xs, [rec["loss"] for rec in history], label="loss")
    ax.set_xlabel("epoch" if history and "epoch" in history[0] else "step")
    ax.set_ylabel("loss")
    if history and "val_acc" in history[0]:
        ax2 = ax.twinx()
        ax2.plot(xs, [rec["val_acc"] for rec in history], color="tab:green", label="val acc")
        ax2.set_ylabel("validation accuracy")
        ax2.set_ylim(0, 1.02)
    ax.set_title(title)
    return _finish(fig, path)


def save_ablation_bars(ablation, key, path, ylabel: str | None = None):
    table = ablation.metric_table(key)
    fig, ax = plt.subplots(figsize=(7, 4))
    kinds = list(table)
    x = np.arange(len(kinds))
    means = [float(np.mean(table[k])) for k in kinds]
    spans = [(max(table[k]) - min(table[k])) / 2 for k in kinds]
    ax.bar(x, means, yerr=spans, capsize=4)
    ax.set_xticks(x, kinds)
    ax.set_ylabel(ylabel or key)
    ax.set_title(f"{key} across seeds {list(ablation.seeds)}")
    for xi, m in zip(x, means):
        ax.text(xi, m, f"{m:.3f}", ha="center", va="bottom", fontsize=8)
    return _finish(fig, path)


def save_stream_trace(stream, path):
    fig, ax = plt.subplots(figsize=(9, 4))
    id_to_label = {pid: i for i, pid in enumerate(PATTERN_IDS)}
    true_labels = [id_to_label[t] for t in stream.true_ids]
    ax.step(stream.end_times, true_labels, where="post", label="true", lw=1.5)
    ax.step(stream.end_times, stream.predicted, where="post", label="predicted", lw=0.8, alpha=0.8)
    for s in stream.switch_times:
        ax.axvline(s, color="tab:red", ls=":", lw=0.8)
    ax.set_yticks(np.arange(len(PATTERN_IDS)), PATTERN_IDS)
    ax.set_xlabel("time [s]")
    ax.set_title(f"streaming recognition (max transient {stream.max_transient_s():.2f} s)")
    ax.legend()
    return _finish(fig, path)
