"""Evaluation: classification/localization metrics, ablations, streaming.

Everything here consumes trained models plus window datasets and emits
plain data structures with CSV writers, so the CLI report path can
render them without recomputing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import WindowDataset, split_dataset
from .flowsim import SensorGeometry, SimConfig, SimRun, simulate_segments
from .kinematics import PATTERN_IDS, pattern_by_id
from .models import ModelHyperparams, build_model
from .signal import WINDOW_SAMPLES, standardize, subtract_baseline
from .training import (
    TrainSettings,
    predict_classes,
    predict_locations_mm,
    predict_raw,
    train_model,
)

TOLERANCE_MM = 20.0

#: Default changing-pattern chain: each pair is (from, to).
DEFAULT_TRANSITIONS = (
    ("s6", "s4"),
    ("s4", "s2"),
    ("s2", "s4"),
    ("s4", "s3"),
    ("s3", "s5"),
    ("s5", "s1"),
)


@dataclass
class ConfusionMatrix:
    """Row = true class, column = predicted class."""

    counts: np.ndarray
    class_ids: tuple = PATTERN_IDS

    @classmethod
    def from_predictions(cls, true_labels, predicted, n_classes: int = len(PATTERN_IDS)) -> "ConfusionMatrix":
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (np.asarray(true_labels), np.asarray(predicted)), 1)
        return cls(counts=counts, class_ids=tuple(PATTERN_IDS[:n_classes]))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / max(self.total, 1))

    def per_class_accuracy(self) -> np.ndarray:
        row = self.counts.sum(axis=1)
        return np.divide(np.diag(self.counts), row, out=np.zeros(len(row)), where=row > 0)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("true\\pred," + ",".join(self.class_ids) + "\n")
            for i, cid in enumerate(self.class_ids):
                fh.write(cid + "," + ",".join(str(int(v)) for v in self.counts[i]) + "\n")


@dataclass
class ClassificationEval:
    confusion: ConfusionMatrix
    accuracy: float
    n: int


def _rmse(errors: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(errors)))) if errors.size else float("nan")


@dataclass
class RmseReport:
    """Location errors in millimetres, stratified two ways.

    ``per_pattern`` and ``per_ly`` map group -> (rmse_x, rmse_y, count);
    overall RMSE relates to the groups through the quadratic mean:
    overall**2 == sum(count * rmse**2) / total.
    """

    rmse_x_mm: float
    rmse_y_mm: float
    n: int
    per_pattern: dict = field(default_factory=dict)
    per_ly: dict = field(default_factory=dict)
    tolerance_mm: float = TOLERANCE_MM
    within_tolerance_x: float = 0.0
    within_tolerance_y: float = 0.0

    @classmethod
    def from_predictions(cls, ds: WindowDataset, pred_mm: np.ndarray, tolerance_mm: float = TOLERANCE_MM) -> "RmseReport":
        errors = np.asarray(pred_mm, dtype=np.float64) - ds.targets_mm()
        per_pattern = {}
        for label in np.unique(ds.labels):
            mask = ds.labels == label
            per_pattern[PATTERN_IDS[label]] = (
                _rmse(errors[mask, 0]), _rmse(errors[mask, 1]), int(mask.sum()))
        per_ly = {}
        for level in np.unique(ds.l_y_mm):
            mask = ds.l_y_mm == level
            per_ly[float(level)] = (_rmse(errors[mask, 0]), _rmse(errors[mask, 1]), int(mask.sum()))
        return cls(
            rmse_x_mm=_rmse(errors[:, 0]),
            rmse_y_mm=_rmse(errors[:, 1]),
            n=len(errors),
            per_pattern=per_pattern,
            per_ly=per_ly,
            tolerance_mm=tolerance_mm,
            within_tolerance_x=float(np.mean(np.abs(errors[:, 0]) <= tolerance_mm)),
            within_tolerance_y=float(np.mean(np.abs(errors[:, 1]) <= tolerance_mm)),
        )

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("group,value,rmse_x_mm,rmse_y_mm,count\n")
            fh.write(f"overall,,{self.rmse_x_mm!r},{self.rmse_y_mm!r},{self.n}\n")
            for pid, (rx, ry, c) in sorted(self.per_pattern.items()):
                fh.write(f"pattern,{pid},{rx!r},{ry!r},{c}\n")
            for level, (rx, ry, c) in sorted(self.per_ly.items()):
                fh.write(f"l_y_mm,{level!r},{rx!r},{ry!r},{c}\n")
            fh.write(f"within_{int(self.tolerance_mm)}mm,x,{self.within_tolerance_x!r},,{self.n}\n")
            fh.write(f"within_{int(self.tolerance_mm)}mm,y,{self.within_tolerance_y!r},,{self.n}\n")


def evaluate_classifier(model, ds: WindowDataset, mode: str = "per_sensor") -> ClassificationEval:
    windows_std = standardize(ds.windows, mode=mode).astype(np.float32)
    preds = predict_classes(model, windows_std)
    confusion = ConfusionMatrix.from_predictions(ds.labels, preds, model.hp.num_classes)
    return ClassificationEval(confusion=confusion, accuracy=confusion.accuracy(), n=len(ds))


def evaluate_regressor(model, ds: WindowDataset, scaler, mode: str = "per_sensor") -> RmseReport:
    windows_std = standardize(ds.windows, mode=mode).astype(np.float32)
    pred_mm = predict_locations_mm(model, windows_std, scaler)
    return RmseReport.from_predictions(ds, pred_mm)


@dataclass
class ExperimentRecord:
    kind: str
    task: str
    seed: int
    metrics: dict
    history: list
    model: object | None = None
    target_scaler: object | None = None


def train_and_evaluate(
    kind: str,
    task: str,
    splits: dict,
    seed: int = 0,
    settings: TrainSettings | None = None,
    hp: ModelHyperparams | None = None,
    keep_model: bool = True,
) -> ExperimentRecord:
    """Train one model on the train split and score it on the test split."""
    from dataclasses import replace

    settings = settings or TrainSettings()
    settings = replace(settings, seed=seed)
    hp = hp or ModelHyperparams()
    model = build_model(kind, task, hp, seed=seed)
    result = train_model(model, task, splits["train"], splits.get("val"), settings)
    metrics = {"wall_seconds": result.wall_seconds}
    if task == "classification":
        ev = evaluate_classifier(model, splits["test"], settings.standardize_mode)
        metrics.update({"test_accuracy": ev.accuracy, "confusion": ev.confusion})
    else:
        report = evaluate_regressor(model, splits["test"], result.target_scaler, settings.standardize_mode)
        metrics.update({"rmse_x_mm": report.rmse_x_mm, "rmse_y_mm": report.rmse_y_mm, "report": report})
    return ExperimentRecord(
        kind=kind,
        task=task,
        seed=seed,
        metrics=metrics,
        history=result.history,
        model=model if keep_model else None,
        target_scaler=result.target_scaler,
    )


@dataclass
class AblationResult:
    records: list
    seeds: tuple
    split_assignment: dict
    task: str = "classification"

    def metric_table(self, key: str) -> dict:
        """kind -> list of the metric across seeds, seed-aligned."""
        table = {}
        for rec in self.records:
            table.setdefault(rec.kind, {})[rec.seed] = rec.metrics[key]
        return {kind: [by_seed[s] for s in self.seeds] for kind, by_seed in table.items()}

    def write_csv(self, path, key: str) -> None:
        table = self.metric_table(key)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("kind," + ",".join(f"seed{s}" for s in self.seeds) + ",mean\n")
            for kind, vals in table.items():
                fh.write(kind + "," + ",".join(repr(float(v)) for v in vals)
                         + f",{float(np.mean(vals))!r}\n")


def ablation_suite(
    splits: dict,
    kinds=("fusion", "time", "freq"),
    seeds=(0, 1, 2),
    settings: TrainSettings | None = None,
    hp: ModelHyperparams | None = None,
    task: str = "classification",
    keep_models: bool = False,
) -> AblationResult:
    """Paired comparison: every kind trained and tested per seed on the
    same split, so differences are attributable to the architecture."""
    records = []
    for seed in seeds:
        for kind in kinds:
            records.append(
                train_and_evaluate(kind, task, splits, seed=seed, settings=settings, hp=hp,
                                   keep_model=keep_models)
            )
    return AblationResult(
        records=records,
        seeds=tuple(seeds),
        split_assignment=splits.get("assignment", {}),
        task=task,
    )


def build_stream_run(
    transitions=DEFAULT_TRANSITIONS,
    geometry: SensorGeometry | None = None,
    config: SimConfig | None = None,
    l_x_mm: float = 0.0,
    l_y_mm: float = 40.0,
    segment_seconds: float = 24.0,
    seed: int | None = None,
) -> SimRun:
    """Simulate a continuous stream that walks a transition chain.

    ``transitions`` must chain head-to-tail; the produced run holds the
    switch times in ``meta['switch_times']``.
    """
    sequence = [transitions[0][0]]
    for frm, to in transitions:
        if frm != sequence[-1]:
            raise ValueError(f"transition {frm}->{to} does not chain from {sequence[-1]}")
        sequence.append(to)
    segments = [(pattern_by_id(pid), segment_seconds) for pid in sequence]
    geometry = geometry or SensorGeometry()
    config = config or SimConfig()
    return simulate_segments(segments, geometry, config, l_x_mm, l_y_mm, seed=seed)


@dataclass
class StreamingResult:
    """Hop-1 predictions over a stream and per-switch recognition delays."""

    end_times: np.ndarray
    predicted: np.ndarray  # int labels
    true_ids: np.ndarray  # pattern id strings at each window end
    switch_times: list
    transients_s: list  # recognition delay per switch; inf when never settled
    min_consecutive: int = 10

    def max_transient_s(self) -> float:
        return max(self.transients_s) if self.transients_s else 0.0

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("end_time_s,predicted_id,true_id\n")
            for t, p, tid in zip(self.end_times, self.predicted, self.true_ids):
                fh.write(f"{t!r},{PATTERN_IDS[int(p)]},{tid}\n")


def streaming_recognition(
    model,
    run: SimRun,
    mode: str = "per_sensor",
    window: int = WINDOW_SAMPLES,
    min_consecutive: int = 10,
) -> StreamingResult:
    """Classify a stream with hop-1 sliding windows and time the switches.

    The recognition delay of a switch is the time from the switch to the
    first window whose prediction opens a run of ``min_consecutive``
    consecutive windows agreeing with the new pattern.
    """
    baselined = subtract_baseline(run.pressures, run.rest_samples)[run.rest_samples:]
    t = run.t[run.rest_samples:]
    ids = run.pattern_ids[run.rest_samples:]
    n = len(baselined)
    if n < window:
        raise ValueError("stream shorter than one window")
    strided = np.lib.stride_tricks.sliding_window_view(baselined, window, axis=0)
    windows = np.ascontiguousarray(np.transpose(strided, (0, 2, 1)))  # (N, window, sensors)
    windows_std = standardize(windows, mode=mode).astype(np.float32)
    preds = predict_classes(model, windows_std)
    end_times = t[window - 1 :]
    true_ids = ids[window - 1 :]

    id_to_label = {pid: i for i, pid in enumerate(PATTERN_IDS)}
    switches = list(run.meta.get("switch_times", []))
    transients = []
    for s_time, new_id in zip(switches, _switch_targets(run)):
        target = id_to_label[new_id]
        after = np.nonzero(end_times > s_time)[0]
        delay = float("inf")
        for i in after:
            if i + min_consecutive <= len(preds) and np.all(preds[i : i + min_consecutive] == target):
                delay = float(end_times[i] - s_time)
                break
        transients.append(delay)
    return StreamingResult(
        end_times=end_times,
        predicted=preds,
        true_ids=true_ids,
        switch_times=switches,
        transients_s=transients,
        min_consecutive=min_consecutive,
    )


def _switch_targets(run: SimRun) -> list:
    """Pattern id in force immediately after each switch time."""
    targets = []
    for s_time in run.meta.get("switch_times", []):
        idx = int(np.searchsorted(run.t, s_time + 1e-9))
        targets.append(str(run.pattern_ids[min(idx, len(run) - 1)]))
    return targets


def write_history_csv(history: list, path) -> None:
    if not history:
        return
    keys = sorted({k for rec in history for k in rec})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(keys) + "\n")
        for rec in history:
            fh.write(",".join(repr(rec[k]) if isinstance(rec.get(k), float) else str(rec.get(k, ""))
                              for k in keys) + "\n")


def make_splits(ds: WindowDataset, split_seed: int = 101) -> dict:
    """Convenience wrapper so callers need only one import."""
    return split_dataset(ds, split_seed=split_seed)
