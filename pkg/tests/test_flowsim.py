"""Flow surrogate: pressure law, experiment protocol, CSV round-trip."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kicksense.flowsim import (
    ConfigurationError,
    InvalidGeometryError,
    L_Y_LEVELS_MM,
    SensorGeometry,
    SimConfig,
    Trajectory,
    clean_pressure_series,
    pressure_at_sensor,
    read_run_csv,
    simulate_run,
    simulate_segments,
    sweep_experiment,
    sweep_trajectory,
    write_run_csv,
)
from kicksense.kinematics import pattern_by_id, pattern_set

GEO = SensorGeometry()
QUIET = SimConfig(noise_std_pa=0.0)


def test_geometry_ports_on_cylinder():
    pos = GEO.port_positions()
    assert pos.shape == (3, 2)
    np.testing.assert_allclose(np.linalg.norm(pos, axis=1), GEO.cylinder_radius)
    # middle port faces straight up at the legs
    np.testing.assert_allclose(pos[1], [0.0, GEO.cylinder_radius], atol=1e-15)


def test_zero_source_strength_gives_zero_pressure():
    cfg = SimConfig(noise_std_pa=0.0, source_strength=0.0)
    t = np.linspace(0.0, 4.0, 101)
    p = clean_pressure_series(pattern_by_id("s1"), GEO, cfg, np.zeros(101), np.full(101, 40.0), t)
    assert np.all(p == 0.0)


def test_clean_pressure_decays_with_distance():
    t = np.linspace(0.0, 4.0, 101)
    rms = []
    for l_y in (20.0, 60.0, 120.0, 200.0):
        p = clean_pressure_series(pattern_by_id("s1"), GEO, QUIET, np.zeros(101), np.full(101, l_y), t)
        rms.append(np.sqrt(np.mean(p**2)))
    assert all(a > b for a, b in zip(rms, rms[1:]))


def test_pressure_oscillates_at_kick_frequency():
    # Naive DFT oracle: the strongest non-DC bin of the clean signal sits
    # at the kick frequency for every pattern.
    rate = 25.0
    n = 200
    t = np.arange(n) / rate
    for pattern in pattern_set():
        p = clean_pressure_series(pattern, GEO, QUIET, np.full(n, 15.0), np.full(n, 40.0), t)[:, 0]
        mags = []
        for k in range(1, n // 2 + 1):
            coeff = sum(p[j] * np.exp(-2j * np.pi * k * j / n) for j in range(n))
            mags.append(abs(coeff))
        peak_hz = (1 + int(np.argmax(mags))) * rate / n
        assert peak_hz == pytest.approx(pattern.frequency_hz, abs=rate / n)


def test_flutter_cancels_at_midline_dolphin_reinforces():
    # With the legs straddling the centred sensor symmetrically, antiphase
    # kicks cancel there while synchronous kicks add.
    t = np.linspace(0.0, 2.0, 51)
    n = len(t)
    dolphin = clean_pressure_series(pattern_by_id("s1"), GEO, QUIET, np.zeros(n), np.full(n, 40.0), t)
    flutter = clean_pressure_series(pattern_by_id("s2"), GEO, QUIET, np.zeros(n), np.full(n, 40.0), t)
    assert np.max(np.abs(flutter[:, 1])) < 1e-9
    assert np.max(np.abs(dolphin[:, 1])) > 1.0
    # off the midline the flutter pair no longer cancels
    assert np.max(np.abs(flutter[:, 0])) > 0.1


def test_faster_kicks_are_stronger():
    t = np.linspace(0.0, 6.0, 151)
    n = len(t)
    rms = {}
    for pid in ("s1", "s3", "s5"):
        p = clean_pressure_series(pattern_by_id(pid), GEO, QUIET, np.zeros(n), np.full(n, 60.0), t)
        rms[pid] = np.sqrt(np.mean(p**2))
    assert rms["s1"] < rms["s3"] < rms["s5"]


def test_pressures_are_quantised_integers():
    run = sweep_experiment(pattern_by_id("s3"), GEO, SimConfig(), 60.0, seed=5)
    assert run.pressures.dtype == np.int64
    scalar = pressure_at_sensor(pattern_by_id("s3"), GEO, SimConfig(), 0.0, 40.0, 1.0, 1)
    assert scalar == int(scalar)


def test_simulate_run_is_deterministic_per_seed():
    traj = Trajectory.constant(8.0, 25.0, 10.0, 40.0)
    a = simulate_run(pattern_by_id("s2"), GEO, SimConfig(), traj, seed=11)
    b = simulate_run(pattern_by_id("s2"), GEO, SimConfig(), traj, seed=11)
    c = simulate_run(pattern_by_id("s2"), GEO, SimConfig(), traj, seed=12)
    np.testing.assert_array_equal(a.pressures, b.pressures)
    assert np.any(a.pressures != c.pressures)


def test_rest_segment_is_noise_only():
    traj = Trajectory.constant(4.0, 25.0, 0.0, 20.0)
    run = simulate_run(pattern_by_id("s1"), GEO, QUIET, traj, seed=3)
    assert run.rest_samples == 200
    assert np.all(run.pressures[: run.rest_samples] == 0)
    assert np.any(run.pressures[run.rest_samples :] != 0)


def test_sweep_trajectory_timing_and_shape():
    traj = sweep_trajectory(SimConfig(), 40.0)
    # 175 -> -175 -> 175 at 500 mm/min: 700 mm at 8.333 mm/s = 84 s
    assert len(traj) == 2100
    assert traj.l_x_mm[0] == pytest.approx(-175.0)
    mid = np.argmax(traj.l_x_mm)
    assert traj.l_x_mm[mid] == pytest.approx(175.0, abs=0.5)
    assert traj.l_x_mm[-1] == pytest.approx(-175.0, abs=0.5)


def test_sweep_run_length_and_effective_fraction():
    run = sweep_experiment(pattern_by_id("s1"), GEO, SimConfig(), 40.0, seed=1)
    assert len(run) == 2300  # 8 s rest + 84 s sweep at 25 Hz
    frac = run.effective_mask().sum() / 2100
    assert frac == pytest.approx(4.0 / 7.0, abs=0.01)


def test_sweep_requires_matrix_level():
    with pytest.raises(ConfigurationError):
        sweep_experiment(pattern_by_id("s1"), GEO, SimConfig(), 50.0)
    for level in L_Y_LEVELS_MM:
        sweep_experiment(pattern_by_id("s1"), GEO, QUIET, level)


def test_segment_stream_switch_times():
    segs = [(pattern_by_id("s6"), 10.0), (pattern_by_id("s4"), 10.0), (pattern_by_id("s2"), 10.0)]
    run = simulate_segments(segs, GEO, SimConfig(), 0.0, 40.0, seed=9)
    assert len(run) == 200 + 750
    assert run.meta["switch_times"] == [18.0, 28.0]
    # ids change exactly at the switches
    idx = int(18.0 * 25)
    assert run.pattern_ids[idx - 1] == "s6"
    assert run.pattern_ids[idx] == "s4"


def test_invalid_inputs_rejected():
    with pytest.raises(InvalidGeometryError):
        SensorGeometry(cylinder_radius=-1.0)
    with pytest.raises(InvalidGeometryError):
        SensorGeometry(angular_positions=(0.3, 0.1, 0.2))
    with pytest.raises(ConfigurationError):
        SimConfig(sample_rate_hz=0.0)
    with pytest.raises(ConfigurationError):
        SimConfig(noise_std_pa=-1.0)
    with pytest.raises(InvalidGeometryError):
        clean_pressure_series(pattern_by_id("s1"), GEO, QUIET, np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ConfigurationError):
        Trajectory(t=np.array([0.0, 0.0]), l_x_mm=np.zeros(2), l_y_mm=np.ones(2))
    with pytest.raises(ConfigurationError):
        Trajectory(t=np.array([0.0, 1.0]), l_x_mm=np.array([0.0, 300.0]), l_y_mm=np.ones(2))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_csv_round_trip_is_exact(tmp_path_factory, seed):
    tmp = tmp_path_factory.mktemp("csv")
    traj = Trajectory.constant(5.0, 25.0, -33.5, 40.0)
    run = simulate_run(pattern_by_id("s4"), GEO, SimConfig(), traj, seed=seed)
    path = tmp / f"run_{seed}.csv"
    write_run_csv(run, path)
    back = read_run_csv(path, rest_samples=run.rest_samples, sample_rate_hz=25.0, seed=run.seed)
    np.testing.assert_array_equal(run.pressures, back.pressures)
    np.testing.assert_array_equal(run.t, back.t)  # bit-exact via repr round-trip
    np.testing.assert_array_equal(run.l_x_mm, back.l_x_mm)
    np.testing.assert_array_equal(run.l_y_mm, back.l_y_mm)
    assert list(run.pattern_ids) == list(back.pattern_ids)


def test_csv_schema_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,p1,p2,L_x,L_y,pattern_id\n0.0,1,2,0.0,20.0,s1\n")
    with pytest.raises(ValueError, match="p3"):
        read_run_csv(bad, rest_samples=1)

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("t,p1,p2,p3,L_x,L_y,pattern_id\n0.0,1,2,3,0.0,20.0,s1\n0.04,1,2\n")
    with pytest.raises(ValueError, match=":3"):
        read_run_csv(ragged, rest_samples=1)

    nonmono = tmp_path / "nonmono.csv"
    nonmono.write_text(
        "t,p1,p2,p3,L_x,L_y,pattern_id\n0.04,1,2,3,0.0,20.0,s1\n0.0,1,2,3,0.0,20.0,s1\n"
    )
    with pytest.raises(ValueError, match="increasing"):
        read_run_csv(nonmono, rest_samples=1)

    notnum = tmp_path / "notnum.csv"
    notnum.write_text("t,p1,p2,p3,L_x,L_y,pattern_id\nzero,1,2,3,0.0,20.0,s1\n")
    with pytest.raises(ValueError, match=":2"):
        read_run_csv(notnum, rest_samples=1)
