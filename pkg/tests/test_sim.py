import json

import numpy as np
import pytest

from fvnlab import (
    DriftSpec,
    NoiseSpec,
    SampledSignal,
    SimTarget,
    apply_drift,
    build_probe,
    simulate,
    track_phase,
)
from fvnlab.sim import _generate_noise

FS = 44100.0


def test_identity_target_passes_the_signal_through():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(3000)
    out = simulate(SimTarget(paths=[np.array([1.0])]), [SampledSignal(x, FS)])
    assert len(out) == 3000
    assert np.max(np.abs(out.samples - x)) < 1e-12


def test_fir_path_matches_direct_convolution():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(2000)
    h = rng.standard_normal(32)
    out = simulate(SimTarget(paths=[h]), [SampledSignal(x, FS)])
    truth = np.convolve(x, h)
    assert len(out) == truth.size
    assert np.max(np.abs(out.samples - truth)) < 1e-12 * np.max(np.abs(truth))


def test_two_paths_sum_at_the_capture_point():
    x = SampledSignal(np.ones(100), FS)
    target = SimTarget(paths=[np.array([1.0]), np.array([0.5])])
    out = simulate(target, [x, x])
    assert out.samples[50] == pytest.approx(1.5, abs=1e-12)


def test_cubic_nonlinearity_has_textbook_harmonic_amplitudes():
    """For A sin(wt) through x + 0.1 x^3: the fundamental grows to
    A + 0.075 A^3 and a third harmonic of 0.025 A^3 appears."""
    n = 4096
    a = 0.3
    cycles = 64
    t = np.arange(n)
    x = a * np.sin(2.0 * np.pi * cycles * t / n)
    target = SimTarget(paths=[np.array([1.0])], nonlinearity=np.array([1.0, 0.0, 0.1]))
    out = simulate(target, [SampledSignal(x, FS)])
    spec = np.abs(np.fft.rfft(out.samples)) * 2.0 / n
    assert spec[cycles] == pytest.approx(a + 0.075 * a**3, abs=1e-9)
    assert spec[3 * cycles] == pytest.approx(0.025 * a**3, abs=1e-9)
    others = np.delete(spec, [cycles, 3 * cycles])
    assert np.max(others) < 1e-9


def test_white_noise_level_is_relative_to_signal_rms():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(44100)
    target = SimTarget(paths=[np.array([1.0])], noise=NoiseSpec("white", -20.0))
    out = simulate(target, [SampledSignal(x, FS)], seed=7)
    expected = np.sqrt(np.mean(x**2)) * np.sqrt(1.0 + 10.0 ** (-20.0 / 10.0))
    assert out.rms() == pytest.approx(expected, rel=0.02)


def test_pink_noise_tilts_by_ten_db_per_decade():
    noise = _generate_noise(1 << 17, FS, NoiseSpec("pink", 0.0), np.random.default_rng(3))
    assert np.sqrt(np.mean(noise**2)) == pytest.approx(1.0, rel=1e-9)
    spec = np.abs(np.fft.rfft(noise)) ** 2
    freqs = np.fft.rfftfreq(1 << 17, 1.0 / FS)
    p_lo = np.mean(spec[(freqs > 40.0) & (freqs < 80.0)])
    p_hi = np.mean(spec[(freqs > 4000.0) & (freqs < 8000.0)])
    tilt = 10.0 * np.log10(p_lo / p_hi)  # two decades apart: expect ~20
    assert 15.0 < tilt < 25.0


def test_simulation_is_reproducible_per_seed():
    rng = np.random.default_rng(4)
    x = SampledSignal(rng.standard_normal(5000), FS)
    target = SimTarget(paths=[np.array([1.0])], noise=NoiseSpec("white", -30.0))
    a = simulate(target, [x], seed=11)
    b = simulate(target, [x], seed=11)
    c = simulate(target, [x], seed=12)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_zero_linear_drift_changes_nothing():
    rng = np.random.default_rng(5)
    x = SampledSignal(rng.standard_normal(8000), FS)
    out = apply_drift(x, DriftSpec("linear", ppm=0.0))
    assert np.max(np.abs(out.samples - x.samples)) < 1e-9


def test_linear_drift_scales_the_tracked_frequency():
    t = np.arange(2 * 44100) / FS
    tone = SampledSignal(np.cos(2.0 * np.pi * 20.0 * t), FS)
    drifted = apply_drift(tone, DriftSpec("linear", ppm=100.0))
    traj = track_phase(drifted, build_probe(20.0, 1.0, FS))
    assert traj.slope() == pytest.approx(2.0 * np.pi * 20.0 * 1.0001, rel=1e-8)


def test_sinusoidal_drift_modulates_the_phase():
    t = np.arange(4 * 44100) / FS
    tone = SampledSignal(np.cos(2.0 * np.pi * 20.0 * t), FS)
    drift = DriftSpec("sinusoidal", depth_s=1e-4, rate_hz=0.5)
    traj = track_phase(apply_drift(tone, drift), build_probe(20.0, 1.0, FS))
    # fit line and sinusoid jointly: over less than two modulation periods a
    # separate detrend would absorb part of the sinusoid
    basis = np.column_stack(
        [
            np.ones_like(traj.times),
            traj.times,
            np.sin(2.0 * np.pi * 0.5 * traj.times),
            np.cos(2.0 * np.pi * 0.5 * traj.times),
        ]
    )
    coef, *_ = np.linalg.lstsq(basis, traj.phase, rcond=None)
    amplitude = float(np.hypot(coef[2], coef[3]))
    assert amplitude == pytest.approx(2.0 * np.pi * 20.0 * 1e-4, rel=0.05)


def test_sinusoidal_drift_depth_limit():
    with pytest.raises(ValueError):
        DriftSpec("sinusoidal", depth_s=0.4, rate_hz=0.5)


def test_target_json_roundtrip(tmp_path):
    target = SimTarget(
        paths=[np.array([1.0, -0.2]), np.array([0.5])],
        nonlinearity=np.array([1.0, 0.0, 0.02]),
        noise=NoiseSpec("pink", -35.0),
        drift=DriftSpec("linear", ppm=40.0),
    )
    f = tmp_path / "target.json"
    target.to_json(f)
    back = SimTarget.from_json(f)
    assert all(np.array_equal(a, b) for a, b in zip(back.paths, target.paths))
    assert np.array_equal(back.nonlinearity, target.nonlinearity)
    assert back.noise == target.noise
    assert back.drift == target.drift


def test_target_json_defaults(tmp_path):
    f = tmp_path / "minimal.json"
    f.write_text(json.dumps({"paths": [[1.0]]}))
    target = SimTarget.from_json(f)
    assert np.array_equal(target.nonlinearity, [1.0])
    assert target.noise is None and target.drift is None


def test_simulate_validation():
    x = SampledSignal(np.ones(100), FS)
    y = SampledSignal(np.ones(100), 48000.0)
    target = SimTarget(paths=[np.array([1.0]), np.array([1.0])])
    with pytest.raises(ValueError):
        simulate(target, [x])
    with pytest.raises(ValueError):
        simulate(target, [x, y])
    with pytest.raises(ValueError):
        SimTarget(paths=[])
    with pytest.raises(ValueError):
        NoiseSpec("brown", -20.0)
    with pytest.raises(ValueError):
        DriftSpec("quadratic")
