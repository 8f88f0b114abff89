"""Recognition models: dual-branch fusion network, single branches, baselines.

The fusion network runs a time-domain branch (strided 1-D convolutions
feeding a bidirectional LSTM) and a time-frequency branch (2-D
convolutions over the log power spectrogram), concatenates the two
64-dimensional branch features, and re-weights the 128 fused features
with a softmax attention gate before a task head: 6-way pattern logits
or a 2-output location regressor. The baselines replace the learned
features with hand-built spectral or amplitude statistics feeding a
small MLP.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .signal import spectrogram_batch

MODEL_KINDS = ("fusion", "time", "freq", "fft_mlp", "stats_mlp")
TASKS = ("classification", "localization")

BRANCH_FEATURES = 64
FUSED_FEATURES = 2 * BRANCH_FEATURES


@dataclass(frozen=True)
class ModelHyperparams:
    window_samples: int = 100
    sensors: int = 3
    sample_rate_hz: float = 25.0
    stft_segment: int = 32
    stft_hop: int = 1
    conv_kernel: int = 5
    conv_filters: tuple = (16, 32)
    lstm_hidden: int = 32
    conv2d_filters: tuple = (8, 16)
    dropout: float = 0.3
    num_classes: int = 6
    mlp_hidden: int = 32
    dtype: str = "float32"

    def np_dtype(self):
        return np.dtype(self.dtype)

    def to_dict(self) -> dict:
        return {
            "window_samples": self.window_samples,
            "sensors": self.sensors,
            "sample_rate_hz": self.sample_rate_hz,
            "stft_segment": self.stft_segment,
            "stft_hop": self.stft_hop,
            "conv_kernel": self.conv_kernel,
            "conv_filters": list(self.conv_filters),
            "lstm_hidden": self.lstm_hidden,
            "conv2d_filters": list(self.conv2d_filters),
            "dropout": self.dropout,
            "num_classes": self.num_classes,
            "mlp_hidden": self.mlp_hidden,
            "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelHyperparams":
        d = dict(d)
        d["conv_filters"] = tuple(d.get("conv_filters", (16, 32)))
        d["conv2d_filters"] = tuple(d.get("conv2d_filters", (8, 16)))
        return cls(**d)


@dataclass
class BatchInputs:
    """Model-ready views of one batch of standardized windows."""

    windows: np.ndarray  # (B, N_d, N_s)
    time: np.ndarray | None = None  # (B, N_s, N_d)
    freq: np.ndarray | None = None  # (B, N_s, M, K) log power


@dataclass
class FusedFeature:
    """Attention-fused feature vector and the gate that produced it."""

    fused: np.ndarray  # (B, 2F)
    weights: np.ndarray  # (B, 2F), rows on the probability simplex


@dataclass
class TaskOutput:
    """Model predictions for one batch."""

    task: str
    raw: np.ndarray  # logits (B, C) or regression outputs (B, 2)
    probs: np.ndarray | None = None
    predicted_class: np.ndarray | None = None


def prepare_inputs(
    windows_std: np.ndarray,
    hp: ModelHyperparams,
    need_time: bool = True,
    need_freq: bool = True,
) -> BatchInputs:
    """Build branch inputs from standardized windows (B, N_d, N_s).

    The time branch sees channels-first series; the frequency branch
    sees ``log1p`` of the power spectrogram, which tames its heavy
    dynamic range before the convolutions.
    """
    w = np.asarray(windows_std, dtype=hp.np_dtype())
    if w.ndim == 2:
        w = w[None]
    time = np.ascontiguousarray(w.transpose(0, 2, 1)) if need_time else None
    freq = None
    if need_freq:
        power = spectrogram_batch(w.astype(np.float64), hp.stft_segment, hp.stft_hop)
        freq = np.log1p(power).astype(hp.np_dtype())
    return BatchInputs(windows=w, time=time, freq=freq)


def attention_fuse(f_time: np.ndarray, f_freq: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> FusedFeature:
    """Concatenate branch features and apply the softmax attention gate."""
    fused = np.concatenate([np.atleast_2d(f_time), np.atleast_2d(f_freq)], axis=1)
    scores = fused @ weight + bias
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    omega = e / e.sum(axis=1, keepdims=True)
    return FusedFeature(fused=fused * omega, weights=omega)


def _head_dim(task: str, hp: ModelHyperparams) -> int:
    if task == "classification":
        return hp.num_classes
    if task == "localization":
        return 2
    raise ValueError(f"unknown task {task!r}")


def _time_branch(hp: ModelHyperparams, rng, dtype) -> nn.Sequential:
    f1, f2 = hp.conv_filters
    return nn.Sequential(
        [
            nn.Conv1D(hp.sensors, f1, hp.conv_kernel, stride=2, padding="same",
                      activation="relu", rng=rng, name="time.conv1", dtype=dtype),
            nn.Conv1D(f1, f2, hp.conv_kernel, stride=2, padding="valid",
                      activation="relu", rng=rng, name="time.conv2", dtype=dtype),
            nn.Transpose((0, 2, 1)),
            nn.BiLSTM(f2, hp.lstm_hidden, rng=rng, name="time.bilstm", dtype=dtype),
            nn.GlobalAvgPool(),
        ]
    )


def _freq_branch(hp: ModelHyperparams, rng, dtype) -> nn.Sequential:
    g1, g2 = hp.conv2d_filters
    frames = (hp.window_samples - hp.stft_segment) // hp.stft_hop + 1
    bins = hp.stft_segment // 2 + 1
    h = (frames - 3) // 2 + 1
    w = (bins - 3) // 2 + 1
    h = (h - 3) // 2 + 1
    w = (w - 3) // 2 + 1
    flat = g2 * h * w
    return nn.Sequential(
        [
            nn.Conv2D(hp.sensors, g1, 3, stride=2, padding="valid",
                      activation="relu", rng=rng, name="freq.conv1", dtype=dtype),
            nn.Conv2D(g1, g2, 3, stride=2, padding="valid",
                      activation="relu", rng=rng, name="freq.conv2", dtype=dtype),
            nn.Flatten(),
            nn.Dense(flat, BRANCH_FEATURES, activation="relu", rng=rng, name="freq.dense", dtype=dtype),
        ]
    )


class Model:
    """Common interface: forward to raw task output, explicit backward."""

    kind = "model"
    needs_time = False
    needs_freq = False

    def __init__(self, task: str, hp: ModelHyperparams, seed: int):
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        self.task = task
        self.hp = hp
        self.seed = int(seed)

    def forward(self, inputs: BatchInputs, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, d_raw: np.ndarray) -> None:
        raise NotImplementedError

    def params(self) -> list[nn.Param]:
        raise NotImplementedError

    def zero_grad(self) -> None:
        for p in self.params():
            p.zero_grad()

    def tensors(self) -> dict:
        return {p.name: p.value for p in self.params()}

    def load_tensors(self, tensors: dict) -> None:
        for p in self.params():
            if p.name not in tensors:
                raise ValueError(f"checkpoint is missing tensor {p.name!r}")
            value = np.asarray(tensors[p.name])
            if value.shape != p.value.shape:
                raise ValueError(f"tensor {p.name!r} has shape {value.shape}, expected {p.value.shape}")
            p.value = value.astype(p.value.dtype)
        # rebind optimiser-facing lists if any were cached by callers
        self._refresh_bindings()

    def _refresh_bindings(self) -> None:
        pass

    def predict(self, inputs: BatchInputs) -> TaskOutput:
        raw = self.forward(inputs, training=False)
        if self.task == "classification":
            probs = nn.softmax(raw.astype(np.float64))
            return TaskOutput(task=self.task, raw=raw, probs=probs, predicted_class=np.argmax(probs, axis=1))
        return TaskOutput(task=self.task, raw=raw)


class FusionModel(Model):
    """Dual-branch network with attention fusion."""

    kind = "fusion"
    needs_time = True
    needs_freq = True

    def __init__(self, task: str, hp: ModelHyperparams, seed: int = 0):
        super().__init__(task, hp, seed)
        dtype = hp.np_dtype()
        rng = np.random.default_rng(seed)
        self.time_branch = _time_branch(hp, rng, dtype)
        self.freq_branch = _freq_branch(hp, rng, dtype)
        self.dropout = nn.Dropout(hp.dropout, rng=np.random.default_rng(seed + 1), name="fusion.dropout")
        self.attention = nn.AttentionFusion(FUSED_FEATURES, rng=rng, name="fusion.attention", dtype=dtype)
        self.head = nn.Dense(FUSED_FEATURES, _head_dim(task, hp), rng=rng, name="head", dtype=dtype)

    def forward(self, inputs, training=False):
        f_t = self.time_branch.forward(inputs.time, training=training)
        f_tf = self.freq_branch.forward(inputs.freq, training=training)
        fused = np.concatenate([f_t, f_tf], axis=1)
        dropped = self.dropout.forward(fused, training=training)
        gated = self.attention.forward(dropped, training=training)
        return self.head.forward(gated, training=training)

    def backward(self, d_raw):
        d_gated = self.head.backward(d_raw)
        d_dropped = self.attention.backward(d_gated)
        d_fused = self.dropout.backward(d_dropped)
        self.time_branch.backward(d_fused[:, :BRANCH_FEATURES])
        self.freq_branch.backward(d_fused[:, BRANCH_FEATURES:])

    def params(self):
        return (
            self.time_branch.params()
            + self.freq_branch.params()
            + self.attention.params()
            + self.head.params()
        )

    def fused_features(self, inputs: BatchInputs) -> FusedFeature:
        """Inference-time view of the attention stage for inspection."""
        f_t = self.time_branch.forward(inputs.time, training=False)
        f_tf = self.freq_branch.forward(inputs.freq, training=False)
        return attention_fuse(f_t, f_tf, self.attention.w.value, self.attention.beta.value)


class _SingleBranchModel(Model):
    def __init__(self, task, hp, seed, branch_builder, input_attr):
        super().__init__(task, hp, seed)
        dtype = hp.np_dtype()
        rng = np.random.default_rng(seed)
        self.branch = branch_builder(hp, rng, dtype)
        self.dropout = nn.Dropout(hp.dropout, rng=np.random.default_rng(seed + 1), name=f"{self.kind}.dropout")
        self.head = nn.Dense(BRANCH_FEATURES, _head_dim(task, hp), rng=rng, name="head", dtype=dtype)
        self._input_attr = input_attr

    def forward(self, inputs, training=False):
        x = getattr(inputs, self._input_attr)
        f = self.branch.forward(x, training=training)
        dropped = self.dropout.forward(f, training=training)
        return self.head.forward(dropped, training=training)

    def backward(self, d_raw):
        d_dropped = self.head.backward(d_raw)
        d_f = self.dropout.backward(d_dropped)
        self.branch.backward(d_f)

    def params(self):
        return self.branch.params() + self.head.params()


class TimeOnlyModel(_SingleBranchModel):
    """Time-domain branch alone (ablation)."""

    kind = "time"
    needs_time = True

    def __init__(self, task, hp, seed=0):
        super().__init__(task, hp, seed, _time_branch, "time")


class FreqOnlyModel(_SingleBranchModel):
    """Time-frequency branch alone (ablation)."""

    kind = "freq"
    needs_freq = True

    def __init__(self, task, hp, seed=0):
        super().__init__(task, hp, seed, _freq_branch, "freq")


def fft_features(windows: np.ndarray, sample_rate_hz: float = 25.0) -> np.ndarray:
    """Dominant-tone features per sensor: the two highest-energy non-DC
    bins of the window's Fourier magnitude, as (frequency Hz, amplitude)
    pairs. Ties resolve to the lower bin. (B, N_d, N_s) -> (B, 4 * N_s).
    """
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim == 2:
        w = w[None]
    batch, n_d, n_s = w.shape
    mag = np.abs(np.fft.rfft(w, axis=1)) * (2.0 / n_d)  # (B, K, N_s)
    mag = mag[:, 1:]  # drop DC
    freqs = np.fft.rfftfreq(n_d, d=1.0 / sample_rate_hz)[1:]
    order = np.argsort(-mag, axis=1, kind="stable")  # ties -> lower bin first
    top2 = order[:, :2]  # (B, 2, N_s)
    feats = np.empty((batch, n_s, 4))
    for rank in range(2):
        idx = top2[:, rank]  # (B, N_s)
        feats[:, :, 2 * rank] = freqs[idx]
        feats[:, :, 2 * rank + 1] = np.take_along_axis(mag, idx[:, None, :], axis=1)[:, 0]
    return feats.reshape(batch, 4 * n_s)


def stats_features(windows: np.ndarray) -> np.ndarray:
    """Amplitude statistics per sensor: max, min, mean. (B, N_d, N_s) -> (B, 3 * N_s)."""
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim == 2:
        w = w[None]
    feats = np.stack([w.max(axis=1), w.min(axis=1), w.mean(axis=1)], axis=2)
    return feats.reshape(w.shape[0], -1)


class MlpBaseline(Model):
    """Hand-built features feeding a two-hidden-layer MLP.

    ``feature_kind`` selects the extractor; features are z-scored with
    statistics fit once on the training set.
    """

    needs_time = False
    needs_freq = False

    def __init__(self, task, hp, seed=0, feature_kind="fft"):
        super().__init__(task, hp, seed)
        if feature_kind not in ("fft", "stats"):
            raise ValueError(f"unknown feature kind {feature_kind!r}")
        self.kind = f"{feature_kind}_mlp"
        self.feature_kind = feature_kind
        dtype = hp.np_dtype()
        rng = np.random.default_rng(seed)
        in_dim = 4 * hp.sensors if feature_kind == "fft" else 3 * hp.sensors
        self.in_dim = in_dim
        self.net = nn.Sequential(
            [
                nn.Dense(in_dim, hp.mlp_hidden, activation="relu", rng=rng, name=f"{self.kind}.fc1", dtype=dtype),
                nn.Dense(hp.mlp_hidden, hp.mlp_hidden, activation="relu", rng=rng, name=f"{self.kind}.fc2", dtype=dtype),
                nn.Dense(hp.mlp_hidden, _head_dim(task, hp), rng=rng, name="head", dtype=dtype),
            ]
        )
        self.feature_mean = np.zeros(in_dim)
        self.feature_std = np.ones(in_dim)

    def features(self, windows: np.ndarray) -> np.ndarray:
        if self.feature_kind == "fft":
            return fft_features(windows, self.hp.sample_rate_hz)
        return stats_features(windows)

    def fit_feature_scaler(self, windows: np.ndarray) -> None:
        feats = self.features(windows)
        self.feature_mean = feats.mean(axis=0)
        self.feature_std = feats.std(axis=0) + 1e-8

    def forward(self, inputs, training=False):
        feats = self.features(inputs.windows)
        scaled = ((feats - self.feature_mean) / self.feature_std).astype(self.hp.np_dtype())
        return self.net.forward(scaled, training=training)

    def backward(self, d_raw):
        self.net.backward(d_raw)

    def params(self):
        return self.net.params()

    def tensors(self):
        out = super().tensors()
        out["feature_scaler.mean"] = self.feature_mean
        out["feature_scaler.std"] = self.feature_std
        return out

    def load_tensors(self, tensors):
        super().load_tensors(tensors)
        self.feature_mean = np.asarray(tensors["feature_scaler.mean"], dtype=np.float64)
        self.feature_std = np.asarray(tensors["feature_scaler.std"], dtype=np.float64)


def build_model(kind: str, task: str, hp: ModelHyperparams | None = None, seed: int = 0) -> Model:
    hp = hp or ModelHyperparams()
    if task == "localization" and hp.dropout:
        # Random feature masking puts a noise floor under the regression
        # outputs, so dropout is reserved for the classification task.
        hp = replace(hp, dropout=0.0)
    if kind == "fusion":
        return FusionModel(task, hp, seed)
    if kind == "time":
        return TimeOnlyModel(task, hp, seed)
    if kind == "freq":
        return FreqOnlyModel(task, hp, seed)
    if kind == "fft_mlp":
        return MlpBaseline(task, hp, seed, feature_kind="fft")
    if kind == "stats_mlp":
        return MlpBaseline(task, hp, seed, feature_kind="stats")
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
