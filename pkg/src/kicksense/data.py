"""Dataset assembly: simulate runs, window them, split, and round-trip CSV.

A dataset is the windowed view of a full experiment matrix: every kick
pattern at every longitudinal level, repeated several times with fresh
noise. Splits are made at the repetition level so that windows from one
physical run never straddle the train/test boundary.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .flowsim import (
    L_Y_LEVELS_MM,
    SensorGeometry,
    SimConfig,
    SimRun,
    read_run_csv,
    sweep_experiment,
    write_run_csv,
)
from .kinematics import PATTERN_IDS, KickPattern, pattern_set
from .signal import DEFAULT_STRIDE, WINDOW_SAMPLES, sliding_windows

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA = "kick-dataset-manifest-v1"

DEFAULT_REPETITIONS = 10
SPLIT_FRACTIONS = (8, 1, 1)  # train : val : test, in repetitions


class SchemaError(ValueError):
    """Malformed dataset file; message carries file and line context."""


@dataclass
class WindowDataset:
    """Windowed recognition samples with aligned label arrays.

    ``windows`` holds baselined (not yet standardized) pressures as
    float32; labels are integer pattern indices into
    :data:`kicksense.kinematics.PATTERN_IDS`.
    """

    windows: np.ndarray  # (N, N_d, N_s) float32
    labels: np.ndarray  # (N,) int64
    l_x_mm: np.ndarray  # (N,) float64
    l_y_mm: np.ndarray  # (N,) float64
    reps: np.ndarray  # (N,) int64
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.windows)
        for name in ("labels", "l_x_mm", "l_y_mm", "reps"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must align with windows ({n} rows)")

    def __len__(self) -> int:
        return len(self.windows)

    def subset(self, indices) -> "WindowDataset":
        idx = np.asarray(indices)
        return WindowDataset(
            windows=self.windows[idx],
            labels=self.labels[idx],
            l_x_mm=self.l_x_mm[idx],
            l_y_mm=self.l_y_mm[idx],
            reps=self.reps[idx],
            meta=dict(self.meta),
        )

    def targets_mm(self) -> np.ndarray:
        """(N, 2) regression targets: lateral and longitudinal offsets."""
        return np.stack([self.l_x_mm, self.l_y_mm], axis=1)


def run_seed(base_seed: int, pattern_index: int, l_y_index: int, rep: int) -> int:
    """Deterministic per-run seed from the experiment coordinates."""
    ss = np.random.SeedSequence([int(base_seed), pattern_index, l_y_index, rep])
    return int(ss.generate_state(1)[0])


def experiment_matrix(
    patterns: tuple[KickPattern, ...] | None = None,
    l_y_levels=L_Y_LEVELS_MM,
    repetitions: int = DEFAULT_REPETITIONS,
    base_seed: int = 7,
):
    """Yield (pattern, l_y_mm, rep, seed) for the full run grid."""
    patterns = patterns or pattern_set()
    for pi, pattern in enumerate(patterns):
        for li, l_y in enumerate(l_y_levels):
            for rep in range(repetitions):
                yield pattern, float(l_y), rep, run_seed(base_seed, pi, li, rep)


def simulate_matrix(
    geometry: SensorGeometry | None = None,
    config: SimConfig | None = None,
    patterns=None,
    l_y_levels=L_Y_LEVELS_MM,
    repetitions: int = DEFAULT_REPETITIONS,
) -> list[tuple[SimRun, int]]:
    """Simulate every run in the matrix; returns (run, rep) pairs."""
    geometry = geometry or SensorGeometry()
    config = config or SimConfig()
    out = []
    for pattern, l_y, rep, seed in experiment_matrix(patterns, l_y_levels, repetitions, config.seed):
        run = sweep_experiment(pattern, geometry, config, l_y, seed=seed)
        run.meta["rep"] = rep
        out.append((run, rep))
    return out


def dataset_from_runs(
    runs: list[tuple[SimRun, int]],
    window: int = WINDOW_SAMPLES,
    stride: int = DEFAULT_STRIDE,
) -> WindowDataset:
    """Window a collection of runs into one dataset."""
    id_to_index = {pid: i for i, pid in enumerate(PATTERN_IDS)}
    chunks, labels, lx, ly, reps = [], [], [], [], []
    for run, rep in runs:
        for pw in sliding_windows(run, window=window, stride=stride):
            chunks.append(pw.series.astype(np.float32))
            labels.append(id_to_index[pw.pattern_id])
            lx.append(pw.l_x_mm)
            ly.append(pw.l_y_mm)
            reps.append(rep)
    if not chunks:
        raise ValueError("no windows produced; runs may be shorter than one window")
    return WindowDataset(
        windows=np.stack(chunks),
        labels=np.asarray(labels, dtype=np.int64),
        l_x_mm=np.asarray(lx),
        l_y_mm=np.asarray(ly),
        reps=np.asarray(reps, dtype=np.int64),
        meta={"window": window, "stride": stride},
    )


def build_dataset(
    geometry: SensorGeometry | None = None,
    config: SimConfig | None = None,
    window: int = WINDOW_SAMPLES,
    stride: int = DEFAULT_STRIDE,
    repetitions: int = DEFAULT_REPETITIONS,
    l_y_levels=L_Y_LEVELS_MM,
) -> WindowDataset:
    """Simulate the full experiment matrix and window it."""
    config = config or SimConfig()
    ds = dataset_from_runs(simulate_matrix(geometry, config, None, l_y_levels, repetitions), window, stride)
    ds.meta.update({"seed": config.seed, "repetitions": repetitions, "noise_std_pa": config.noise_std_pa})
    return ds


def split_dataset(ds: WindowDataset, split_seed: int = 101, fractions=SPLIT_FRACTIONS) -> dict:
    """Partition by repetition with one seeded permutation.

    With the default 10 repetitions and 8:1:1 fractions this yields
    eight training repetitions and one each for validation and test.
    Returns ``{"train": ..., "val": ..., "test": ..., "assignment": ...}``.
    """
    rep_values = np.unique(ds.reps)
    n = len(rep_values)
    total = sum(fractions)
    counts = [f * n // total for f in fractions]
    counts[0] = n - sum(counts[1:])
    if min(counts) < 1:
        raise ValueError(f"{n} repetitions cannot fill a {fractions} split")
    perm = np.random.default_rng(split_seed).permutation(rep_values)
    bounds = np.cumsum(counts)
    groups = {
        "train": perm[: bounds[0]],
        "val": perm[bounds[0] : bounds[1]],
        "test": perm[bounds[1] :],
    }
    out = {"assignment": {k: sorted(int(r) for r in v) for k, v in groups.items()}, "split_seed": split_seed}
    for name, reps in groups.items():
        mask = np.isin(ds.reps, reps)
        out[name] = ds.subset(np.nonzero(mask)[0])
    return out


def run_filename(pattern_id: str, l_y_mm: float, rep: int) -> str:
    return f"{pattern_id}_ly{int(round(l_y_mm)):03d}_rep{rep}.csv"


def export_dataset(
    out_dir,
    geometry: SensorGeometry | None = None,
    config: SimConfig | None = None,
    patterns=None,
    l_y_levels=L_Y_LEVELS_MM,
    repetitions: int = DEFAULT_REPETITIONS,
    window: int = WINDOW_SAMPLES,
    stride: int = DEFAULT_STRIDE,
) -> dict:
    """Simulate the matrix and write one CSV per run plus a manifest.

    Returns the manifest dict (also written as ``manifest.json``).
    """
    geometry = geometry or SensorGeometry()
    config = config or SimConfig()
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for pattern, l_y, rep, seed in experiment_matrix(patterns, l_y_levels, repetitions, config.seed):
        run = sweep_experiment(pattern, geometry, config, l_y, seed=seed)
        fname = run_filename(pattern.id, l_y, rep)
        write_run_csv(run, os.path.join(out_dir, fname))
        entries.append(
            {"file": fname, "pattern_id": pattern.id, "l_y_mm": float(l_y), "rep": rep, "seed": seed}
        )
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "sample_rate_hz": config.sample_rate_hz,
        "rest_samples": config.rest_samples,
        "noise_std_pa": config.noise_std_pa,
        "seed": config.seed,
        "window": window,
        "stride": stride,
        "runs": entries,
    }
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def ingest_manifest(data_dir, window: int | None = None, stride: int | None = None) -> WindowDataset:
    """Load an exported dataset directory back into windows.

    Validates the manifest schema and every run file; malformed rows
    raise :class:`SchemaError` naming the file and line.
    """
    manifest_path = os.path.join(data_dir, MANIFEST_NAME)
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"{manifest_path}: manifest not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{manifest_path}: invalid JSON ({exc})") from None
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(f"{manifest_path}: unsupported schema {manifest.get('schema')!r}")
    for key in ("rest_samples", "sample_rate_hz", "runs"):
        if key not in manifest:
            raise SchemaError(f"{manifest_path}: missing key {key!r}")
    window = window or manifest.get("window", WINDOW_SAMPLES)
    stride = stride or manifest.get("stride", DEFAULT_STRIDE)
    runs = []
    for entry in manifest["runs"]:
        path = os.path.join(data_dir, entry["file"])
        try:
            run = read_run_csv(
                path,
                rest_samples=manifest["rest_samples"],
                sample_rate_hz=manifest["sample_rate_hz"],
                seed=entry.get("seed", -1),
            )
        except FileNotFoundError:
            raise SchemaError(f"{path}: run file listed in manifest is missing") from None
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        expected = {str(entry["pattern_id"])}
        seen = set(np.unique(run.pattern_ids))
        if seen != expected:
            raise SchemaError(f"{path}: pattern ids {sorted(seen)} disagree with manifest {sorted(expected)}")
        runs.append((run, int(entry["rep"])))
    ds = dataset_from_runs(runs, window=window, stride=stride)
    ds.meta.update({"seed": manifest.get("seed"), "noise_std_pa": manifest.get("noise_std_pa")})
    return ds
