"""Phenomenological surrogate for the leg-kick flow field.

Each leg tip acts as an oscillating point source at the kick frequency.
A sensor port at distance ``r`` from a leg sees a pressure contribution
with amplitude ``source_strength * f * exp(-r / decay_length) / r**2``;
the two legs superpose, so synchronous (dolphin) kicks reinforce near
the midline while antiphase (flutter) kicks partially cancel. Gaussian
sensor noise is added and the result is quantised to the 1 Pa sensor
resolution. This is a surrogate for desk-scale testing, not a
hydrodynamic model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kinematics import KickPattern, deflection_arrays

MM_PER_M = 1000.0

#: Lateral sweep endpoints and the clipped effective estimation range, mm.
SWEEP_LIMIT_MM = 175.0
EFFECTIVE_LIMIT_MM = 100.0

#: Longitudinal displacement levels of the experiment matrix, mm.
L_Y_LEVELS_MM = tuple(float(v) for v in range(20, 201, 20))

CSV_COLUMNS = ("t", "p1", "p2", "p3", "L_x", "L_y", "pattern_id")


class InvalidGeometryError(ValueError):
    """Sensor/source arrangement that the surrogate cannot evaluate."""


class ConfigurationError(ValueError):
    """Simulation configuration that violates a documented constraint."""


@dataclass(frozen=True)
class SensorGeometry:
    """Cylindrical sensing body with pressure ports on the leg-facing side."""

    sensor_count: int = 3
    angular_positions: tuple[float, ...] = (-math.pi / 4, 0.0, math.pi / 4)
    cylinder_radius: float = 0.04
    sensor_depth_offset: float = 0.0

    def __post_init__(self):
        if self.sensor_count < 1:
            raise InvalidGeometryError("at least one sensor is required")
        if len(self.angular_positions) != self.sensor_count:
            raise InvalidGeometryError("angular_positions must list one angle per sensor")
        diffs = np.diff(self.angular_positions)
        if self.sensor_count > 1 and not np.all(diffs > 0):
            raise InvalidGeometryError("angular positions must be strictly increasing")
        if self.cylinder_radius <= 0:
            raise InvalidGeometryError("cylinder radius must be positive")

    def port_positions(self) -> np.ndarray:
        """(N_s, 2) port coordinates in metres; ports face the +y half plane."""
        ang = np.asarray(self.angular_positions)
        return self.cylinder_radius * np.stack([np.sin(ang), np.cos(ang)], axis=1)


@dataclass(frozen=True)
class SimConfig:
    sample_rate_hz: float = 25.0
    noise_std_pa: float = 2.0
    decay_length_m: float = 0.25
    source_strength: float = 0.4  # Pa * m^2 at a 1 Hz kick
    frequency_exponent: float = 2.0  # oscillating-source pressure scales with f**2
    lateral_speed_mm_per_min: float = 500.0
    seed: int = 7
    rest_seconds: float = 8.0
    amplitude_m: float = 0.02
    leg_separation_m: float = 0.06
    quantum_pa: float = 1.0

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ConfigurationError("sample rate must be positive")
        if self.noise_std_pa < 0:
            raise ConfigurationError("noise std must be non-negative")
        if self.decay_length_m <= 0:
            raise ConfigurationError("decay length must be positive")
        if self.lateral_speed_mm_per_min <= 0:
            raise ConfigurationError("lateral speed must be positive")
        if self.leg_separation_m <= 0 or self.amplitude_m <= 0:
            raise ConfigurationError("leg separation and amplitude must be positive")

    @property
    def rest_samples(self) -> int:
        return int(round(self.rest_seconds * self.sample_rate_hz))


@dataclass(frozen=True)
class Trajectory:
    """Relative leg-model displacement over time; t starts at motion onset."""

    t: np.ndarray
    l_x_mm: np.ndarray
    l_y_mm: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.size == 0:
            raise ConfigurationError("trajectory must contain at least one sample")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ConfigurationError("trajectory timestamps must be strictly increasing")
        if np.any(np.abs(np.asarray(self.l_x_mm)) > SWEEP_LIMIT_MM + 1e-9):
            raise ConfigurationError(f"|L_x| must stay within the {SWEEP_LIMIT_MM} mm sweep bounds")

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def constant(cls, duration_s: float, sample_rate_hz: float, l_x_mm: float, l_y_mm: float) -> "Trajectory":
        n = int(round(duration_s * sample_rate_hz))
        t = np.arange(n) / sample_rate_hz
        return cls(t=t, l_x_mm=np.full(n, float(l_x_mm)), l_y_mm=np.full(n, float(l_y_mm)))


@dataclass
class SimRun:
    """One simulated recording, aligned sample-by-sample with its labels.

    ``pressures`` holds quantised values in whole pascals. The first
    ``rest_samples`` rows are the at-rest segment used for baseline
    estimation.
    """

    t: np.ndarray
    pressures: np.ndarray  # (T, N_s) int64, whole Pa
    l_x_mm: np.ndarray
    l_y_mm: np.ndarray
    pattern_ids: np.ndarray  # (T,) unicode
    rest_samples: int
    sample_rate_hz: float
    seed: int
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    def motion_slice(self) -> slice:
        return slice(self.rest_samples, len(self.t))

    def effective_mask(self, limit_mm: float = EFFECTIVE_LIMIT_MM) -> np.ndarray:
        """True where the sample is in motion and inside the clipped range."""
        mask = np.abs(self.l_x_mm) <= limit_mm
        mask[: self.rest_samples] = False
        return mask


def _leg_positions(config: SimConfig, geometry: SensorGeometry, l_x_mm, l_y_mm) -> np.ndarray:
    """(T, 2 legs, 2 xy) leg-tip coordinates in metres."""
    l_x = np.atleast_1d(np.asarray(l_x_mm, dtype=float)) / MM_PER_M
    l_y = np.atleast_1d(np.asarray(l_y_mm, dtype=float)) / MM_PER_M
    half = config.leg_separation_m / 2.0
    x = np.stack([l_x - half, l_x + half], axis=1)
    y = np.broadcast_to((geometry.cylinder_radius + l_y)[:, None], x.shape)
    return np.stack([x, y], axis=2)


def clean_pressure_series(
    pattern: KickPattern,
    geometry: SensorGeometry,
    config: SimConfig,
    l_x_mm,
    l_y_mm,
    t,
) -> np.ndarray:
    """Noise-free (T, N_s) pressure series for the given displacement history.

    Source strength scales with a power of the kick frequency (the
    default square mirrors an oscillating source, whose pressure follows
    the tip acceleration), so faster kicks reach farther above the noise.
    """
    l_y = np.atleast_1d(np.asarray(l_y_mm, dtype=float))
    if np.any(l_y <= 0):
        raise InvalidGeometryError("longitudinal displacement L_y must be positive")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    legs = _leg_positions(config, geometry, l_x_mm, l_y_mm)  # (T, 2, 2)
    ports = geometry.port_positions()  # (N_s, 2)
    delta = legs[:, None, :, :] - ports[None, :, None, :]  # (T, N_s, 2, 2)
    r_sq = np.sum(delta**2, axis=3) + geometry.sensor_depth_offset**2
    r = np.sqrt(r_sq)
    decay = np.exp(-r / config.decay_length_m) / r_sq  # (T, N_s, 2)
    strength = config.source_strength * pattern.frequency_hz**config.frequency_exponent
    wave_left, wave_right = deflection_arrays(pattern, 1.0, t)  # unit waveforms
    waves = np.stack([wave_left, wave_right], axis=1)  # (T, 2)
    return strength * np.einsum("tsl,tl->ts", decay, waves)


def pressure_at_sensor(
    pattern: KickPattern,
    geometry: SensorGeometry,
    config: SimConfig,
    l_x_mm: float,
    l_y_mm: float,
    t,
    sensor_index: int,
    rng: np.random.Generator | None = None,
):
    """Quantised pressure (Pa) at one sensor port; scalar or per-sample array.

    With noise enabled, the generator defaults to a fresh one seeded from
    ``config.seed`` so repeated calls are reproducible.
    """
    if not 0 <= sensor_index < geometry.sensor_count:
        raise InvalidGeometryError(f"sensor_index {sensor_index} out of range")
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    n = t_arr.size
    clean = clean_pressure_series(
        pattern, geometry, config, np.full(n, float(l_x_mm)), np.full(n, float(l_y_mm)), t_arr
    )[:, sensor_index]
    if config.noise_std_pa > 0:
        if rng is None:
            rng = np.random.default_rng(config.seed)
        clean = clean + rng.normal(0.0, config.noise_std_pa, size=n)
    quantised = np.rint(clean / config.quantum_pa) * config.quantum_pa
    return float(quantised[0]) if scalar else quantised


def simulate_run(
    pattern: KickPattern,
    geometry: SensorGeometry,
    config: SimConfig,
    trajectory: Trajectory,
    seed: int | None = None,
) -> SimRun:
    """Simulate a full recording: rest segment followed by the trajectory.

    The legs stay still during the rest segment, so those rows contain
    only noise; kick oscillation phase starts at motion onset. Output is
    deterministic for a given seed.
    """
    rest = config.rest_samples
    if rest < 1:
        raise ConfigurationError("the at-rest segment needs at least one sample for the baseline")
    run_seed = config.seed if seed is None else int(seed)
    rng = np.random.default_rng(run_seed)

    n_motion = len(trajectory)
    n_total = rest + n_motion
    n_s = geometry.sensor_count

    clean = np.zeros((n_total, n_s))
    clean[rest:] = clean_pressure_series(
        pattern, geometry, config, trajectory.l_x_mm, trajectory.l_y_mm, trajectory.t
    )
    noisy = clean
    if config.noise_std_pa > 0:
        noisy = clean + rng.normal(0.0, config.noise_std_pa, size=(n_total, n_s))
    pressures = np.rint(noisy / config.quantum_pa).astype(np.int64)

    rest_t = np.arange(rest) / config.sample_rate_hz
    rest_dur = rest / config.sample_rate_hz
    t = np.concatenate([rest_t, rest_dur + trajectory.t])
    l_x = np.concatenate([np.full(rest, trajectory.l_x_mm[0]), trajectory.l_x_mm])
    l_y = np.concatenate([np.full(rest, trajectory.l_y_mm[0]), trajectory.l_y_mm])
    ids = np.full(n_total, pattern.id, dtype="U8")
    return SimRun(
        t=t,
        pressures=pressures,
        l_x_mm=l_x,
        l_y_mm=l_y,
        pattern_ids=ids,
        rest_samples=rest,
        sample_rate_hz=config.sample_rate_hz,
        seed=run_seed,
    )


def sweep_trajectory(config: SimConfig, l_y_mm: float) -> Trajectory:
    """Back-and-forth lateral sweep between the +-175 mm endpoints."""
    speed = config.lateral_speed_mm_per_min / 60.0  # mm/s
    half_duration = 2.0 * SWEEP_LIMIT_MM / speed
    duration = 2.0 * half_duration
    n = int(round(duration * config.sample_rate_hz))
    t = np.arange(n) / config.sample_rate_hz
    l_x = np.where(
        t <= half_duration,
        -SWEEP_LIMIT_MM + speed * t,
        SWEEP_LIMIT_MM - speed * (t - half_duration),
    )
    return Trajectory(t=t, l_x_mm=l_x, l_y_mm=np.full(n, float(l_y_mm)))


def sweep_experiment(
    pattern: KickPattern,
    geometry: SensorGeometry,
    config: SimConfig,
    l_y_mm: float,
    seed: int | None = None,
) -> SimRun:
    """One labelled sweep run at a longitudinal level of the experiment matrix."""
    if not any(abs(l_y_mm - level) < 1e-9 for level in L_Y_LEVELS_MM):
        raise ConfigurationError(f"L_y must be one of {L_Y_LEVELS_MM} mm, got {l_y_mm!r}")
    run = simulate_run(pattern, geometry, config, sweep_trajectory(config, l_y_mm), seed=seed)
    run.meta["l_y_mm"] = float(l_y_mm)
    return run


def simulate_segments(
    segments: list[tuple[KickPattern, float]],
    geometry: SensorGeometry,
    config: SimConfig,
    l_x_mm: float,
    l_y_mm: float,
    seed: int | None = None,
) -> SimRun:
    """Concatenate fixed-position runs with mid-stream pattern switches.

    ``segments`` is a list of (pattern, duration_s). A single rest
    segment precedes the stream; each pattern's oscillation restarts its
    own phase clock, as the physical legs would on receiving a new
    command.
    """
    if not segments:
        raise ConfigurationError("at least one stream segment is required")
    rest = config.rest_samples
    if rest < 1:
        raise ConfigurationError("the at-rest segment needs at least one sample for the baseline")
    run_seed = config.seed if seed is None else int(seed)
    rng = np.random.default_rng(run_seed)
    rate = config.sample_rate_hz

    blocks, ids = [], []
    for pattern, duration in segments:
        n = int(round(duration * rate))
        if n < 1:
            raise ConfigurationError("segment durations must cover at least one sample")
        t_local = np.arange(n) / rate
        blocks.append(
            clean_pressure_series(
                pattern, geometry, config, np.full(n, float(l_x_mm)), np.full(n, float(l_y_mm)), t_local
            )
        )
        ids.append(np.full(n, pattern.id, dtype="U8"))

    clean = np.concatenate(blocks, axis=0)
    n_motion = len(clean)
    n_total = rest + n_motion
    full = np.zeros((n_total, geometry.sensor_count))
    full[rest:] = clean
    if config.noise_std_pa > 0:
        full = full + rng.normal(0.0, config.noise_std_pa, size=full.shape)
    pressures = np.rint(full / config.quantum_pa).astype(np.int64)

    t = np.arange(n_total) / rate
    pattern_ids = np.concatenate([np.full(rest, segments[0][0].id, dtype="U8")] + ids)
    switch_times = []
    acc = rest / rate
    for _, duration in segments[:-1]:
        acc += duration
        switch_times.append(acc)
    return SimRun(
        t=t,
        pressures=pressures,
        l_x_mm=np.full(n_total, float(l_x_mm)),
        l_y_mm=np.full(n_total, float(l_y_mm)),
        pattern_ids=pattern_ids,
        rest_samples=rest,
        sample_rate_hz=rate,
        seed=run_seed,
        meta={"switch_times": switch_times},
    )


def write_run_csv(run: SimRun, path) -> None:
    """Write a run in the canonical schema: t, p1..p3, L_x, L_y, pattern_id.

    Floats are written with repr so parsing restores them bit-exactly.
    """
    n_s = run.pressures.shape[1]
    header = ["t"] + [f"p{i + 1}" for i in range(n_s)] + ["L_x", "L_y", "pattern_id"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(run)):
            cells = [repr(float(run.t[i]))]
            cells += [str(int(v)) for v in run.pressures[i]]
            cells += [repr(float(run.l_x_mm[i])), repr(float(run.l_y_mm[i])), str(run.pattern_ids[i])]
            fh.write(",".join(cells) + "\n")


def read_run_csv(path, rest_samples: int, sample_rate_hz: float = 25.0, seed: int = -1) -> SimRun:
    """Parse a run CSV back into a :class:`SimRun`.

    Raises ``ValueError`` naming the missing column or the offending
    line for malformed input, and rejects non-monotonic timestamps.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: empty file")
        cols = header.split(",")
        missing = [c for c in CSV_COLUMNS if c not in cols]
        if missing:
            raise ValueError(f"{path}: missing required column(s) {', '.join(missing)}")
        idx = {c: cols.index(c) for c in cols}
        p_cols = [c for c in cols if c.startswith("p") and c[1:].isdigit()]
        t, lx, ly, ids = [], [], [], []
        pressures = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(cols):
                raise ValueError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(cells)}")
            try:
                t.append(float(cells[idx["t"]]))
                pressures.append([int(cells[idx[c]]) for c in p_cols])
                lx.append(float(cells[idx["L_x"]]))
                ly.append(float(cells[idx["L_y"]]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            ids.append(cells[idx["pattern_id"]])
    t = np.asarray(t)
    if len(t) > 1 and not np.all(np.diff(t) > 0):
        raise ValueError(f"{path}: timestamps must be strictly increasing")
    if len(t) < rest_samples:
        raise ValueError(f"{path}: shorter than its declared rest segment ({rest_samples} samples)")
    return SimRun(
        t=t,
        pressures=np.asarray(pressures, dtype=np.int64),
        l_x_mm=np.asarray(lx),
        l_y_mm=np.asarray(ly),
        pattern_ids=np.asarray(ids, dtype="U8"),
        rest_samples=rest_samples,
        sample_rate_hz=sample_rate_hz,
        seed=seed,
    )


def with_noise_disabled(config: SimConfig) -> SimConfig:
    return replace(config, noise_std_pa=0.0)
