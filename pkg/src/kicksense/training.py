"""Training loops for the recognition models.

Classification trains for a fixed number of epochs; localization is
step-driven because its loss keeps improving long after the pattern
classes separate. Both share the optimiser, the stepped learning-rate
decay, and deterministic seeded shuffling so a rerun with the same
settings reproduces the same checkpoint bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .data import WindowDataset
from .models import BatchInputs, Model, ModelHyperparams, MlpBaseline, build_model, prepare_inputs
from .signal import standardize


@dataclass
class TargetScaler:
    """Z-scores regression targets; predictions map back to millimetres."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, targets: np.ndarray) -> "TargetScaler":
        t = np.asarray(targets, dtype=np.float64)
        return cls(mean=t.mean(axis=0), std=t.std(axis=0) + 1e-8)

    def transform(self, targets: np.ndarray) -> np.ndarray:
        return (np.asarray(targets, dtype=np.float64) - self.mean) / self.std

    def inverse(self, scaled: np.ndarray) -> np.ndarray:
        return np.asarray(scaled, dtype=np.float64) * self.std + self.mean

    @classmethod
    def identity(cls, dim: int = 2) -> "TargetScaler":
        return cls(mean=np.zeros(dim), std=np.ones(dim))


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 30
    steps: int = 1000  # used by step-driven (localization) training
    batch_size: int = 128
    base_lr: float = 0.005
    lr_factor: float = 0.5
    lr_decay_epochs: int = 10
    lr_decay_steps: int = 400  # for step-driven training
    max_steps_per_epoch: int = 50
    standardize_mode: str = "per_sensor"
    optimizer: str = "adam"
    seed: int = 0
    log_every: int = 0  # 0 silences progress lines
    eval_subsample: int = 2000


@dataclass
class TrainResult:
    model: Model
    history: list = field(default_factory=list)
    target_scaler: TargetScaler | None = None
    settings: TrainSettings | None = None
    wall_seconds: float = 0.0


def make_optimizer(model: Model, settings: TrainSettings):
    if settings.optimizer == "adam":
        return nn.Adam(model.params(), lr=settings.base_lr)
    if settings.optimizer == "sgd":
        return nn.Sgd(model.params(), lr=settings.base_lr)
    raise ValueError(f"unknown optimizer {settings.optimizer!r}")


def standardized_windows(ds: WindowDataset, mode: str) -> np.ndarray:
    """Dataset windows standardized once, kept in float32."""
    return standardize(ds.windows, mode=mode).astype(np.float32)


def _batch_inputs(model: Model, windows_std: np.ndarray) -> BatchInputs:
    return prepare_inputs(windows_std, model.hp, need_time=model.needs_time, need_freq=model.needs_freq)


def _eval_classifier(model, windows_std, labels, limit, rng):
    n = len(windows_std)
    idx = np.arange(n) if n <= limit else rng.choice(n, size=limit, replace=False)
    preds = predict_classes(model, windows_std[idx])
    return float(np.mean(preds == labels[idx]))


def train_classifier(
    model: Model,
    train_ds: WindowDataset,
    val_ds: WindowDataset | None = None,
    settings: TrainSettings | None = None,
) -> TrainResult:
    """Epoch-driven cross-entropy training of a 6-way pattern classifier.

    Large training sets are subsampled to ``max_steps_per_epoch``
    freshly shuffled batches per epoch, which keeps the epoch a unit of
    schedule rather than a full pass.
    """
    settings = settings or TrainSettings()
    t0 = time.perf_counter()
    rng = np.random.default_rng(settings.seed)
    windows_std = standardized_windows(train_ds, settings.standardize_mode)
    labels = train_ds.labels
    if isinstance(model, MlpBaseline):
        model.fit_feature_scaler(windows_std)
    val_windows = val_labels = None
    if val_ds is not None and len(val_ds):
        val_windows = standardized_windows(val_ds, settings.standardize_mode)
        val_labels = val_ds.labels

    n = len(windows_std)
    steps_per_epoch = min(-(-n // settings.batch_size), settings.max_steps_per_epoch)
    schedule = nn.LrSchedule(settings.base_lr, settings.lr_factor, settings.lr_decay_epochs * steps_per_epoch)
    opt = make_optimizer(model, settings)
    history = []
    step = 0
    for epoch in range(settings.epochs):
        perm = rng.permutation(n)
        losses, correct, seen = [], 0, 0
        for b in range(steps_per_epoch):
            idx = perm[b * settings.batch_size : (b + 1) * settings.batch_size]
            if idx.size == 0:
                break
            inputs = _batch_inputs(model, windows_std[idx])
            logits = model.forward(inputs, training=True)
            loss, dlogits, probs = nn.softmax_cross_entropy(logits, labels[idx])
            model.zero_grad()
            model.backward(dlogits)
            opt.step(lr=schedule.lr(step))
            step += 1
            losses.append(loss)
            correct += int(np.sum(np.argmax(probs, axis=1) == labels[idx]))
            seen += idx.size
        record = {"epoch": epoch, "loss": float(np.mean(losses)), "train_acc": correct / max(seen, 1)}
        if val_windows is not None:
            record["val_acc"] = _eval_classifier(model, val_windows, val_labels, settings.eval_subsample, rng)
        history.append(record)
        if settings.log_every and (epoch + 1) % settings.log_every == 0:
            msg = f"epoch {epoch + 1}/{settings.epochs} loss={record['loss']:.4f} acc={record['train_acc']:.3f}"
            if "val_acc" in record:
                msg += f" val={record['val_acc']:.3f}"
            print(msg)
    return TrainResult(model=model, history=history, settings=settings,
                       wall_seconds=time.perf_counter() - t0)


def train_regressor(
    model: Model,
    train_ds: WindowDataset,
    val_ds: WindowDataset | None = None,
    settings: TrainSettings | None = None,
) -> TrainResult:
    """Step-driven MSE training of the two-output location regressor.

    Targets are z-scored with training-set statistics; the returned
    scaler maps predictions back to millimetres.
    """
    settings = settings or TrainSettings()
    t0 = time.perf_counter()
    rng = np.random.default_rng(settings.seed)
    windows_std = standardized_windows(train_ds, settings.standardize_mode)
    scaler = TargetScaler.fit(train_ds.targets_mm())
    targets = scaler.transform(train_ds.targets_mm()).astype(windows_std.dtype)
    if isinstance(model, MlpBaseline):
        model.fit_feature_scaler(windows_std)

    n = len(windows_std)
    schedule = nn.LrSchedule(settings.base_lr, settings.lr_factor, settings.lr_decay_steps)
    opt = make_optimizer(model, settings)
    history = []
    perm = rng.permutation(n)
    cursor = 0
    running = []
    for step in range(settings.steps):
        if cursor + settings.batch_size > n:
            perm = rng.permutation(n)
            cursor = 0
        idx = perm[cursor : cursor + settings.batch_size]
        cursor += settings.batch_size
        inputs = _batch_inputs(model, windows_std[idx])
        pred = model.forward(inputs, training=True)
        loss, dpred = nn.mse_loss(pred, targets[idx])
        model.zero_grad()
        model.backward(dpred)
        opt.step(lr=schedule.lr(step))
        running.append(loss)
        if (step + 1) % 100 == 0 or step + 1 == settings.steps:
            record = {"step": step + 1, "loss": float(np.mean(running))}
            running = []
            history.append(record)
            if settings.log_every:
                print(f"step {record['step']}/{settings.steps} loss={record['loss']:.5f}")
    return TrainResult(model=model, history=history, target_scaler=scaler, settings=settings,
                       wall_seconds=time.perf_counter() - t0)


def predict_raw(model: Model, windows_std: np.ndarray, batch: int = 512) -> np.ndarray:
    """Inference over many windows in fixed-size batches."""
    outs = []
    for start in range(0, len(windows_std), batch):
        inputs = _batch_inputs(model, windows_std[start : start + batch])
        outs.append(model.forward(inputs, training=False))
    return np.concatenate(outs, axis=0)


def predict_classes(model: Model, windows_std: np.ndarray, batch: int = 512) -> np.ndarray:
    """Argmax class indices; ties resolve to the lower index."""
    return np.argmax(predict_raw(model, windows_std, batch), axis=1)


def predict_locations_mm(model: Model, windows_std: np.ndarray, scaler: TargetScaler, batch: int = 512) -> np.ndarray:
    return scaler.inverse(predict_raw(model, windows_std, batch))


def save_model(path, model: Model, settings: TrainSettings | None = None,
               target_scaler: TargetScaler | None = None, extra_meta: dict | None = None) -> None:
    """Checkpoint a model with everything needed to rebuild and reuse it.

    Deliberately excludes wall-clock fields so identical runs write
    identical bytes.
    """
    meta = {
        "kind": model.kind,
        "task": model.task,
        "seed": model.seed,
        "hyperparams": model.hp.to_dict(),
        "standardize_mode": settings.standardize_mode if settings else "per_sensor",
    }
    if extra_meta:
        meta.update(extra_meta)
    tensors = dict(model.tensors())
    if target_scaler is not None:
        tensors["target_scaler.mean"] = target_scaler.mean
        tensors["target_scaler.std"] = target_scaler.std
    nn.save_checkpoint(path, meta, tensors)


def load_model(path):
    """Rebuild a checkpointed model; returns (model, meta, target_scaler)."""
    meta, tensors = nn.load_checkpoint(path)
    hp = ModelHyperparams.from_dict(meta["hyperparams"])
    model = build_model(meta["kind"], meta["task"], hp, seed=int(meta["seed"]))
    model.load_tensors(tensors)
    scaler = None
    if "target_scaler.mean" in tensors:
        scaler = TargetScaler(mean=tensors["target_scaler.mean"], std=tensors["target_scaler.std"])
    return model, meta, scaler


def settings_for_task(task: str, base: TrainSettings | None = None, **overrides) -> TrainSettings:
    """Task defaults: 30 epochs for classification, 1000 steps for localization."""
    base = base or TrainSettings()
    if overrides:
        base = replace(base, **overrides)
    return base


def train_model(model: Model, task: str, train_ds, val_ds=None, settings=None) -> TrainResult:
    if task == "classification":
        return train_classifier(model, train_ds, val_ds, settings)
    if task == "localization":
        return train_regressor(model, train_ds, val_ds, settings)
    raise ValueError(f"unknown task {task!r}")
