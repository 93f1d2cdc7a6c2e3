import numpy as np
import pytest

from fvnlab import (
    FvnSpec,
    SampledSignal,
    SequencePlan,
    ShapingFilter,
    assemble_sequence,
    build_code_matrix,
    center_pulse,
    design_slope_filter,
    inverse_shape,
    multiplex,
    shape_spectrum,
    synthesize_unit_fvn,
)

FS = 44100.0

_slope_cache = {}


def slope_filter(db_per_octave):
    """Design fits are the slow part here, so share them across tests."""
    if db_per_octave not in _slope_cache:
        _slope_cache[db_per_octave] = design_slope_filter(db_per_octave, FS)
    return _slope_cache[db_per_octave]


def test_assembly_places_code_signed_copies():
    codes = build_code_matrix(2)
    plan = SequencePlan(
        FvnSpec(sigma_t=0.005), code_row_index=1, period_no=100, repetitions=12
    )
    probe = SampledSignal(np.array([1.0]), FS)
    seq = assemble_sequence(plan, codes, unit=probe)
    assert len(seq) == 12 * 100
    row = codes.row(1)
    for r in range(12):
        assert seq.samples[r * 100] == row[r % codes.length]
    rest = seq.samples.copy()
    rest[::100] = 0.0
    assert np.all(rest == 0.0)


def test_assembly_energy_with_disjoint_periods():
    spec = FvnSpec(sigma_t=0.01, seed=2)
    unit = center_pulse(synthesize_unit_fvn(spec))
    plan = SequencePlan(spec, 0, period_no=len(unit), repetitions=16)
    seq = assemble_sequence(plan, build_code_matrix(1), unit=unit)
    # non-overlapping copies: energies add with no cross terms at all
    energy = float(np.sum(seq.samples**2))
    assert energy == pytest.approx(16.0 * np.sum(unit.samples**2), rel=1e-12)
    assert seq.rms() == pytest.approx(np.sqrt(16.0 / len(seq)), rel=1e-9)


def test_default_unit_is_the_centered_pulse():
    spec = FvnSpec(sigma_t=0.005, seed=1)
    codes = build_code_matrix(1)
    plan = SequencePlan(spec, 0, period_no=6000, repetitions=8)
    auto = assemble_sequence(plan, codes)
    manual = assemble_sequence(
        plan, codes, unit=center_pulse(synthesize_unit_fvn(spec))
    )
    assert np.array_equal(auto.samples, manual.samples)


def test_too_few_repetitions_rejected():
    codes = build_code_matrix(2)  # code length 8, so 12 is the minimum
    plan = SequencePlan(FvnSpec(sigma_t=0.005), 0, period_no=1000, repetitions=11)
    with pytest.raises(ValueError):
        assemble_sequence(plan, codes)


def test_plan_validation():
    with pytest.raises(ValueError):
        SequencePlan(FvnSpec(sigma_t=0.01), 0, period_no=0, repetitions=8)
    with pytest.raises(ValueError):
        SequencePlan(FvnSpec(sigma_t=0.01), -1, period_no=100, repetitions=8)


def test_multiplex_sums_and_pads():
    a = SampledSignal(np.ones(5), FS)
    b = SampledSignal(2.0 * np.ones(3), FS)
    np.testing.assert_array_equal(multiplex([a, b]).samples, [3, 3, 3, 1, 1])


def test_multiplex_rejects_empty_and_mixed_rates():
    with pytest.raises(ValueError):
        multiplex([])
    with pytest.raises(ValueError):
        multiplex(
            [SampledSignal(np.ones(4), 44100.0), SampledSignal(np.ones(4), 48000.0)]
        )


def test_multiplexed_power_is_near_the_sum_of_powers():
    """Channels with different seeds are effectively uncorrelated."""
    codes = build_code_matrix(2)
    seqs = [
        assemble_sequence(
            SequencePlan(FvnSpec(sigma_t=0.005, seed=40 + i), i, 2205, 12), codes
        )
        for i in range(2)
    ]
    mixed = multiplex(seqs)
    individual = sum(float(np.sum(s.samples**2)) for s in seqs)
    assert float(np.sum(mixed.samples**2)) == pytest.approx(individual, rel=0.05)


def test_shaping_roundtrip_is_exact():
    rng = np.random.default_rng(0)
    x = SampledSignal(rng.standard_normal(5000), FS)
    filt = slope_filter(-3.0)
    back = inverse_shape(shape_spectrum(x, filt), filt)
    assert np.max(np.abs(back.samples - x.samples)) < 1e-9


def test_slope_fit_minus_three_db_per_octave():
    filt = slope_filter(-3.0)
    grid = np.logspace(np.log10(50.0), np.log10(10000.0), 300)
    dev = filt.magnitude_db(grid, FS) + 3.0 * np.log2(grid / 10000.0)
    dev -= np.mean(dev)  # absolute gain is free
    assert np.max(np.abs(dev)) < 1.5


def test_slope_fit_minus_six_db_per_octave():
    """An integer-dB slope is close to a plain pole, so the fit is tight."""
    filt = slope_filter(-6.0)
    grid = np.logspace(np.log10(50.0), np.log10(10000.0), 300)
    dev = filt.magnitude_db(grid, FS) + 6.0 * np.log2(grid / 10000.0)
    dev -= np.mean(dev)
    assert np.max(np.abs(dev)) < 0.5


def test_zero_slope_fit_is_flat():
    filt = slope_filter(0.0)
    grid = np.logspace(np.log10(50.0), np.log10(10000.0), 300)
    mags = filt.magnitude_db(grid, FS)
    assert np.max(mags) - np.min(mags) < 0.01


def test_shaping_filter_validation():
    with pytest.raises(ValueError):
        ShapingFilter(np.array([-2.5]))  # pole at 2.5
    with pytest.raises(ValueError):
        ShapingFilter(np.array([np.nan]))
    assert ShapingFilter(np.array([1.8, 0.81])).order == 2  # poles at -0.9


def test_design_validation():
    with pytest.raises(ValueError):
        design_slope_filter(-3.0, FS, order=0)
    with pytest.raises(ValueError):
        design_slope_filter(-3.0, FS, f_lo=0.0)
