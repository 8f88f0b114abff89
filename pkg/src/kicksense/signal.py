"""Pressure-signal conditioning: baselining, windowing, and time-frequency maps.

The measurement chain drifts sensor-to-sensor, so every run starts with
an at-rest segment whose mean is subtracted channel-wise. Recognition
operates on fixed-length sliding windows of the baselined series; the
time-frequency branch additionally maps each window to a short-time
power spectrogram.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

#: Window length in samples (4 s at the 25 Hz sensor rate).
WINDOW_SAMPLES = 100
DEFAULT_STRIDE = 5

#: Short-time transform defaults: 32-point segments advanced one sample
#: at a time across the 100-sample window -> 69 frames, 17 retained bins.
STFT_SEGMENT = 32
STFT_HOP = 1

EPS = 1e-8


@dataclass
class PressureWindow:
    """One recognition window with its labels.

    ``series`` is (N_d, N_s): baselined pressures, channels last. Labels
    are taken at the window's final sample, so they describe where the
    legs are *now*.
    """

    series: np.ndarray
    l_x_mm: float
    l_y_mm: float
    pattern_id: str
    end_time: float
    run_key: str = ""

    def __post_init__(self):
        self.series = np.asarray(self.series)
        if self.series.ndim != 2:
            raise ValueError("window series must be 2-D (samples, sensors)")


@dataclass
class Spectrogram:
    """Power spectrogram of one window, per sensor.

    ``power`` is (N_s, M, K): sensors, time frames, retained frequency
    bins. ``freqs_hz`` and ``frame_times`` describe the axes.
    """

    power: np.ndarray
    freqs_hz: np.ndarray
    frame_times: np.ndarray


def subtract_baseline(pressures: np.ndarray, rest_samples: int) -> np.ndarray:
    """Remove each channel's resting mean, estimated from the rest segment.

    Returns a float array shaped like the input; the rest rows are kept
    (still baselined) so callers can slice as they see fit.
    """
    p = np.asarray(pressures, dtype=float)
    if p.ndim != 2:
        raise ValueError("pressures must be 2-D (samples, sensors)")
    if not 1 <= rest_samples <= len(p):
        raise ValueError("rest_samples must cover at least one sample within the series")
    baseline = p[:rest_samples].mean(axis=0)
    return p - baseline


def sliding_windows(
    run,
    window: int = WINDOW_SAMPLES,
    stride: int = DEFAULT_STRIDE,
    effective_limit_mm: float = 100.0,
) -> list[PressureWindow]:
    """Cut a run into labelled windows over its motion segment.

    Windows are placed on the baselined motion samples only; each is
    labelled by its final sample and dropped when that sample lies
    outside the effective lateral range. A run too short to fit one
    window yields an empty list with a warning rather than an error.
    """
    if window < 2 or stride < 1:
        raise ValueError("window must be >= 2 samples and stride >= 1")
    baselined = subtract_baseline(run.pressures, run.rest_samples)[run.rest_samples:]
    l_x = run.l_x_mm[run.rest_samples:]
    l_y = run.l_y_mm[run.rest_samples:]
    ids = run.pattern_ids[run.rest_samples:]
    t = run.t[run.rest_samples:]
    n = len(baselined)
    if n < window:
        warnings.warn(f"run of {n} motion samples is shorter than one {window}-sample window")
        return []
    key = f"seed{run.seed}"
    out = []
    for start in range(0, n - window + 1, stride):
        end = start + window - 1
        if abs(l_x[end]) > effective_limit_mm:
            continue
        out.append(
            PressureWindow(
                series=baselined[start : start + window],
                l_x_mm=float(l_x[end]),
                l_y_mm=float(l_y[end]),
                pattern_id=str(ids[end]),
                end_time=float(t[end]),
                run_key=key,
            )
        )
    return out


def hamming_window(n: int) -> np.ndarray:
    """Length-n Hamming taper, endpoints 0.08."""
    if n < 2:
        raise ValueError("hamming window needs at least two points")
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(TWO_PI * k / (n - 1))


def stft(
    series: np.ndarray,
    segment: int = STFT_SEGMENT,
    hop: int = STFT_HOP,
    sample_rate_hz: float = 25.0,
    half: bool = True,
):
    """Short-time Fourier transform of a 1-D series.

    Frames of ``segment`` samples are advanced ``hop`` samples at a
    time, tapered with a Hamming window, and transformed. Returns
    ``(coeffs, freqs_hz, frame_times)`` where coeffs is (M, K) complex;
    with ``half`` only the K = segment // 2 + 1 non-negative-frequency
    bins are retained.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("stft expects a 1-D series")
    if segment < 2 or hop < 1:
        raise ValueError("segment must be >= 2 and hop >= 1")
    if len(x) < segment:
        raise ValueError(f"series of {len(x)} samples is shorter than one {segment}-sample frame")
    frames = np.lib.stride_tricks.sliding_window_view(x, segment)[::hop]
    tapered = frames * hamming_window(segment)
    if half:
        coeffs = np.fft.rfft(tapered, axis=1)
        freqs = np.fft.rfftfreq(segment, d=1.0 / sample_rate_hz)
    else:
        coeffs = np.fft.fft(tapered, axis=1)
        freqs = np.fft.fftfreq(segment, d=1.0 / sample_rate_hz)
    starts = np.arange(0, len(x) - segment + 1, hop)
    frame_times = (starts + (segment - 1) / 2.0) / sample_rate_hz
    return coeffs, freqs, frame_times


def spectrogram(
    series: np.ndarray,
    segment: int = STFT_SEGMENT,
    hop: int = STFT_HOP,
    sample_rate_hz: float = 25.0,
) -> Spectrogram:
    """Per-sensor power spectrogram |STFT|**2 of a (N_d, N_s) window."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 2:
        raise ValueError("spectrogram expects a 2-D (samples, sensors) window")
    chans = []
    freqs = frame_times = None
    for s in range(x.shape[1]):
        coeffs, freqs, frame_times = stft(x[:, s], segment, hop, sample_rate_hz)
        chans.append(np.abs(coeffs) ** 2)
    return Spectrogram(power=np.stack(chans, axis=0), freqs_hz=freqs, frame_times=frame_times)


def spectrogram_batch(
    series_batch: np.ndarray,
    segment: int = STFT_SEGMENT,
    hop: int = STFT_HOP,
) -> np.ndarray:
    """Power spectrograms for a batch: (B, N_d, N_s) -> (B, N_s, M, K).

    Vectorised across the batch and sensors; matches :func:`spectrogram`
    channel-for-channel.
    """
    x = np.asarray(series_batch, dtype=float)
    if x.ndim != 3:
        raise ValueError("expected a (batch, samples, sensors) array")
    frames = np.lib.stride_tricks.sliding_window_view(x, segment, axis=1)[:, ::hop]
    # frames: (B, M, N_s, segment)
    tapered = frames * hamming_window(segment)
    coeffs = np.fft.rfft(tapered, axis=3)
    power = np.abs(coeffs) ** 2
    return np.transpose(power, (0, 2, 1, 3))


def standardize(series_batch: np.ndarray, mode: str = "per_sensor") -> np.ndarray:
    """Zero-mean/unit-variance scaling of each window before the models.

    ``per_sensor`` normalises every channel of every window on its own;
    ``shared`` uses one mean/std per window across channels, preserving
    cross-sensor amplitude ratios; ``none`` passes data through as
    float. A small epsilon guards silent channels.
    """
    x = np.asarray(series_batch, dtype=float)
    if x.ndim == 2:
        return standardize(x[None], mode)[0]
    if x.ndim != 3:
        raise ValueError("expected (batch, samples, sensors) or (samples, sensors)")
    if mode == "none":
        return x
    if mode == "per_sensor":
        mean = x.mean(axis=1, keepdims=True)
        std = x.std(axis=1, keepdims=True)
    elif mode == "shared":
        mean = x.mean(axis=(1, 2), keepdims=True)
        std = x.std(axis=(1, 2), keepdims=True)
    else:
        raise ValueError(f"unknown standardization mode {mode!r}")
    return (x - mean) / (std + EPS)


def export_spectrogram_csv(spec: Spectrogram, path) -> None:
    """Write a spectrogram as long-form CSV: sensor, frame, bin, freq, time, power."""
    n_s, m, k = spec.power.shape
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("sensor,frame,bin,freq_hz,frame_time_s,power\n")
        for s in range(n_s):
            for i in range(m):
                for j in range(k):
                    fh.write(
                        f"{s},{i},{j},{repr(float(spec.freqs_hz[j]))},"
                        f"{repr(float(spec.frame_times[i]))},{repr(float(spec.power[s, i, j]))}\n"
                    )
