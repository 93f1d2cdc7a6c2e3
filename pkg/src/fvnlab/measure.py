"""Pulse compression, synchronized averaging, and nonlinearity separation.

Compressing a recording with the time-reversed unit FVN collapses every
repetition into (a delayed copy of) the system impulse response.  Averaging
a code-aligned block of periods then cancels content carried by any other
code row exactly, while content carried by the matching row adds
coherently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .codes import CodeMatrix
from .signal import SampledSignal
from .spectrum import PowerSpectrum, power_spectrum


@dataclass(frozen=True, eq=False)
class MeasurementResult:
    """Per-code impulse responses plus derived linear/nonlinear splits.

    linear_ir is the samplewise mean of per_code_irs.  deviations (per-code
    IR minus the mean) and their statistics are filled by
    separate_nonlinear; noise_ir by the caller when a background recording
    is available.  periods_averaged counts the periods that went into each
    per-code average.
    """

    per_code_irs: list[SampledSignal]
    linear_ir: SampledSignal
    period_no: int
    periods_averaged: int
    code_row_indices: list[int]
    deviations: list[SampledSignal] | None = None
    deviation_rms: np.ndarray | None = None
    pooled_deviation_power: PowerSpectrum | None = None
    noise_ir: SampledSignal | None = None


def pulse_compress(recorded: SampledSignal, unit: SampledSignal) -> SampledSignal:
    """Convolve with the time-reversed unit pulse, compensating its group delay.

    `unit` must be the pulse waveform as emitted, i.e. center_pulse of a
    synthesized unit FVN (the raw circular buffer splits its envelope at the
    buffer seam and does not compress cleanly under linear convolution).  A
    recording equal to the undelayed pulse compresses to a unit impulse at
    sample 0; any propagation delay shows up as a positive offset.  The
    output has the same length as the input (the leading transient of the
    linear convolution is cut off).
    """
    if recorded.fs != unit.fs:
        raise ValueError("sample rates of recording and unit FVN differ")
    reversed_unit = unit.samples[::-1]
    full = scipy.signal.fftconvolve(recorded.samples, reversed_unit)
    return SampledSignal(full[unit.samples.size - 1 :], recorded.fs)


def synchronized_average(
    compressed: SampledSignal,
    code_row: np.ndarray,
    period_no: int,
    guard_periods: int = 2,
    total_periods: int | None = None,
) -> SampledSignal:
    """Average a centered, code-length-multiple block of periods.

    Segment r (absolute period index) is weighted by code_row[r mod n], so
    any contiguous block whose length is a multiple of n covers every code
    element equally often; content modulated by a different row cancels
    exactly.  guard_periods at each end are always discarded, and the
    averaged count is the largest multiple of n that fits, centered in what
    remains.  total_periods caps the period count at the number of actual
    pulse placements when the recording carries extra convolution tail
    (otherwise tail-only periods would dilute the average).
    """
    row = np.asarray(code_row, dtype=np.float64)
    if row.ndim != 1 or not np.all(np.abs(row) == 1):
        raise ValueError("code_row must be a 1-D +-1 sequence")
    if period_no < 1:
        raise ValueError("period_no must be >= 1")
    n = row.size
    total = len(compressed) // period_no
    if total_periods is not None:
        total = min(total, total_periods)
    available = total - 2 * guard_periods
    count = (available // n) * n if available > 0 else 0
    if count < n:
        raise ValueError(
            f"too few periods: {total} total, need at least "
            f"{n + 2 * guard_periods} for one code period plus guards"
        )
    start = guard_periods + (available - count) // 2
    block = compressed.samples[start * period_no : (start + count) * period_no]
    segments = block.reshape(count, period_no)
    weights = row[(start + np.arange(count)) % n]
    return SampledSignal(weights @ segments / count, compressed.fs)


def demultiplex(
    recorded: SampledSignal,
    units: list[SampledSignal],
    codes: CodeMatrix,
    period_no: int,
    code_row_indices: list[int] | None = None,
    guard_periods: int = 2,
    total_periods: int | None = None,
) -> MeasurementResult:
    """Recover one impulse response per (unit pulse, code row) pair.

    `units` are emission-form pulses, matching what assemble_sequence
    placed.  By default unit i is paired with code row i.  Pass the
    emission's repetition count as total_periods when the pulse is longer
    than two periods, so trailing tail-only periods are not averaged in.
    The operation is linear in the recording, so scaled or summed
    recordings demultiplex to scaled or summed results.
    """
    if not units:
        raise ValueError("need at least one unit FVN")
    if code_row_indices is None:
        code_row_indices = list(range(len(units)))
    if len(code_row_indices) != len(units):
        raise ValueError("one code row index per unit required")
    if max(code_row_indices) >= codes.rows:
        raise ValueError("code row index out of range")
    irs = []
    periods_averaged = None
    for unit, row_index in zip(units, code_row_indices):
        compressed = pulse_compress(recorded, unit)
        averaged = synchronized_average(
            compressed, codes.row(row_index), period_no, guard_periods,
            total_periods=total_periods,
        )
        irs.append(averaged)
        total = len(compressed) // period_no
        if total_periods is not None:
            total = min(total, total_periods)
        available = total - 2 * guard_periods
        periods_averaged = (available // codes.length) * codes.length
    linear = SampledSignal(
        np.mean([ir.samples for ir in irs], axis=0), recorded.fs
    )
    return MeasurementResult(
        per_code_irs=irs,
        linear_ir=linear,
        period_no=period_no,
        periods_averaged=periods_averaged,
        code_row_indices=list(code_row_indices),
    )


def separate_nonlinear(result: MeasurementResult) -> MeasurementResult:
    """Split per-code IRs into their mean and per-code deviations.

    The mean estimates the linear component; deviations collect what the
    time-frequency structure of each FVN spreads differently, i.e. the
    nonlinear (and noise) residue.  Requires at least two per-code IRs.
    Also reports per-code deviation RMS and the pooled deviation power
    spectrum (mean periodogram of the deviations).
    """
    irs = result.per_code_irs
    if len(irs) < 2:
        raise ValueError("nonlinearity separation needs at least two code channels")
    stack = np.stack([ir.samples for ir in irs])
    mean = stack.mean(axis=0)
    fs = irs[0].fs
    deviations = [SampledSignal(row - mean, fs) for row in stack]
    dev_rms = np.sqrt(np.mean((stack - mean) ** 2, axis=1))
    pooled = np.mean(
        [power_spectrum(dev).power for dev in deviations], axis=0
    )
    freqs = power_spectrum(deviations[0]).freqs
    return MeasurementResult(
        per_code_irs=irs,
        linear_ir=SampledSignal(mean, fs),
        period_no=result.period_no,
        periods_averaged=result.periods_averaged,
        code_row_indices=result.code_row_indices,
        deviations=deviations,
        deviation_rms=dev_rms,
        pooled_deviation_power=PowerSpectrum(freqs, pooled),
        noise_ir=result.noise_ir,
    )


def noise_floor(
    background: SampledSignal,
    units: list[SampledSignal],
    codes: CodeMatrix,
    period_no: int,
    expected_length: int | None = None,
) -> SampledSignal:
    """Run the measurement pipeline on a background-only recording.

    The result is the level that the averaging pipeline would show with no
    stimulus: the effective noise floor of the measurement.  When
    expected_length is given, the background must match it so floor and
    measurement share the same averaging count.
    """
    if expected_length is not None and len(background) != expected_length:
        raise ValueError(
            f"background length {len(background)} does not match "
            f"measurement length {expected_length}"
        )
    return demultiplex(background, units, codes, period_no).linear_ir
