"""Phase tracking and clock-warp correction on synthetic signals.

Tracked-signal cases use plain tones: the tracker itself does not care
whether the fundamental comes from a pulse train or a cosine, and tones
have exactly known trajectories.
"""

import numpy as np
import pytest

from fvnlab import (
    PhaseTrajectory,
    SampledSignal,
    WarpMap,
    apply_warp,
    build_probe,
    build_warp_map,
    track_phase,
)
from fvnlab.align import instantaneous_frequency
from fvnlab.resample import HALF_TAPS

FS = 44100.0


def tracked_tone(f_o, eps=0.0, seconds=2.0):
    t = np.arange(int(seconds * FS)) / FS
    sig = SampledSignal(np.cos(2.0 * np.pi * f_o * (1.0 + eps) * t), FS)
    return track_phase(sig, build_probe(f_o, 1.0, FS))


def test_probe_shape():
    probe = build_probe(20.0, 1.0, FS)
    assert probe.taps.size == 2 * probe.half + 1
    assert probe.half == round(3.0 * FS / 20.0)
    assert probe.taps[probe.half] == pytest.approx(1.0 + 0.0j, abs=1e-12)
    # envelope nulls at both ends (alternating coefficient sum)
    assert abs(probe.taps[0]) < 1e-9
    assert abs(probe.taps[-1]) < 1e-9


def test_probe_validation():
    with pytest.raises(ValueError):
        build_probe(0.0, 1.0, FS)
    with pytest.raises(ValueError):
        build_probe(30000.0, 1.0, FS)
    with pytest.raises(ValueError):
        build_probe(20.0, 3.0, FS)


def test_instantaneous_frequency_of_a_tone():
    n = np.arange(5000)
    y = np.exp(2j * np.pi * 997.0 * n / FS)
    freq, valid = instantaneous_frequency(y, FS)
    assert np.all(valid)
    assert np.max(np.abs(freq.samples - 997.0)) < 1e-8
    down, _ = instantaneous_frequency(np.conj(y), FS)
    assert np.max(np.abs(down.samples + 997.0)) < 1e-8


def test_instantaneous_frequency_of_a_chirp():
    n = np.arange(5000)
    phase = 2.0 * np.pi * (1000.0 * n + 0.05 * n**2) / FS
    freq, _ = instantaneous_frequency(np.exp(1j * phase), FS)
    # interval n holds the average frequency over [n, n+1]
    expected = 1000.0 + 0.05 * (2.0 * n[:-1] + 1.0)
    assert np.max(np.abs(freq.samples - expected)) < 1e-8


def test_instantaneous_frequency_flags_dead_intervals():
    y = np.exp(2j * np.pi * 0.01 * np.arange(100))
    y[40:60] *= 1e-12
    _, valid = instantaneous_frequency(y, FS)
    assert not valid[45]
    assert valid[10]


def test_tracked_tone_matches_nominal_phase():
    traj = tracked_tone(20.0)
    assert traj.slope() == pytest.approx(2.0 * np.pi * 20.0, rel=1e-9)
    nominal = 2.0 * np.pi * 20.0 * traj.times
    assert np.max(np.abs(traj.phase - nominal)) < 1e-6


def test_tracked_tone_sees_a_frequency_offset():
    eps = 1e-4
    traj = tracked_tone(20.0, eps=eps)
    assert traj.slope() == pytest.approx(2.0 * np.pi * 20.0 * (1 + eps), rel=1e-9)


def test_tracking_silence_fails_loudly():
    probe = build_probe(20.0, 1.0, FS)
    with pytest.raises(ValueError):
        track_phase(SampledSignal(np.zeros(88200), FS), probe)


def test_tracking_rejects_short_recordings():
    probe = build_probe(20.0, 1.0, FS)
    with pytest.raises(ValueError):
        track_phase(SampledSignal(np.ones(1000), FS), probe)


def test_warp_of_identical_trajectories_is_identity():
    traj = tracked_tone(20.0)
    warp = build_warp_map(traj, traj)
    assert np.max(np.abs(warp.deviation())) < 1e-15


def test_warp_slope_reads_the_clock_ratio():
    """drifted[m] = rec(m (1 + eps)) shows up as t_da = (1 + eps) t_ad."""
    reference = tracked_tone(20.0)
    for eps in (-2e-4, -1e-4, 1e-4, 2e-4):
        measured = tracked_tone(20.0, eps=eps)
        slope, intercept = build_warp_map(reference, measured).linear_fit()
        assert abs(slope - (1.0 + eps)) < 1e-9
        assert abs(intercept) < 1e-8


def test_warp_slope_synthetic_trajectories_are_exact():
    t = np.linspace(0.5, 2.0, 400)
    reference = PhaseTrajectory(t, 2.0 * np.pi * 20.0 * t)
    eps = 1e-4
    measured = PhaseTrajectory(t, 2.0 * np.pi * 20.0 * (1 + eps) * t)
    slope, _ = build_warp_map(reference, measured).linear_fit()
    assert abs(slope - (1.0 + eps)) < 1e-12


def test_nonmonotone_trajectory_is_rejected():
    t = np.linspace(0.0, 1.0, 100)
    phase = 2.0 * np.pi * 20.0 * t
    bad = phase.copy()
    bad[50] = bad[48]  # tracker glitch
    good = PhaseTrajectory(t, phase)
    with pytest.warns(UserWarning):
        with pytest.raises(ValueError):
            build_warp_map(good, PhaseTrajectory(t, bad))


def test_disjoint_trajectories_are_rejected():
    t = np.linspace(0.0, 1.0, 100)
    a = PhaseTrajectory(t, 100.0 + 10.0 * t)
    b = PhaseTrajectory(t, 500.0 + 10.0 * t)
    with pytest.raises(ValueError):
        build_warp_map(a, b)


def test_warp_map_validation():
    with pytest.raises(ValueError):
        WarpMap(np.array([0.0, 1.0, 1.0]), np.array([0.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        WarpMap(np.array([0.0]), np.array([0.0]))


def test_extended_continues_the_end_slopes():
    t = np.linspace(0.0, 1.0, 200)
    warp = WarpMap(t, 1.0001 * t + 0.003)
    ext = warp.extended(-0.5, 1.5)
    assert ext.t_ad[0] == -0.5 and ext.t_ad[-1] == 1.5
    assert ext.t_da[0] == pytest.approx(1.0001 * -0.5 + 0.003, abs=1e-9)
    assert ext.t_da[-1] == pytest.approx(1.0001 * 1.5 + 0.003, abs=1e-9)
    np.testing.assert_array_equal(ext.t_ad[1:-1], warp.t_ad)


def test_apply_warp_identity_returns_the_signal():
    rng = np.random.default_rng(5)
    x = SampledSignal(rng.standard_normal(10000), FS)
    span = np.array([-0.1, len(x) / FS + 0.1])
    out = apply_warp(x, WarpMap(span, span))
    assert np.max(np.abs(out.samples - x.samples)) < 1e-9


def test_apply_warp_then_inverse_restores_the_interior():
    """Full-band noise through a warp and its inverse: limited only by the
    interpolation kernel's accuracy near the Nyquist frequency."""
    rng = np.random.default_rng(6)
    x = SampledSignal(rng.standard_normal(20000), FS)
    hi = len(x) / FS + 0.1
    grid = np.linspace(-0.1, hi, 50)
    forward = WarpMap(grid, 1.0001 * grid)
    backward = WarpMap(1.0001 * grid, grid)
    back = apply_warp(apply_warp(x, forward), backward)
    pad = 4 * HALF_TAPS
    err = np.max(np.abs(back.samples[pad:-pad] - x.samples[pad:-pad]))
    assert err < 1e-3


def test_apply_warp_requires_coverage():
    x = SampledSignal(np.zeros(10000), FS)
    short = np.array([0.01, 0.05])
    with pytest.raises(ValueError, match="extended"):
        apply_warp(x, WarpMap(short, short))
