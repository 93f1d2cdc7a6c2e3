"""Test-signal assembly: repetition, code modulation, spectral shaping.

A measurement signal repeats one unit FVN every period_no samples with the
polarity of an orthogonal code row.  Where repetitions are closer than the
FVN buffer the tails simply add; the code structure is what later lets the
receiver separate overlapping content again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.signal

from .codes import CodeMatrix
from .fvn import FvnSpec, center_pulse, synthesize_unit_fvn
from .signal import SampledSignal


@dataclass(frozen=True)
class SequencePlan:
    """One channel of a measurement: which FVN, which code row, how often."""

    fvn_spec: FvnSpec
    code_row_index: int
    period_no: int
    repetitions: int

    def __post_init__(self):
        if self.period_no < 1:
            raise ValueError(f"period_no must be >= 1, got {self.period_no}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.code_row_index < 0:
            raise ValueError("code_row_index must be >= 0")


def _is_minimum_phase(a: np.ndarray) -> bool:
    """Schur-Cohn test: every step-down reflection coefficient inside (-1, 1).

    Numerically far more reliable than root finding for high orders, where
    np.roots can report a pole on the circle for a comfortably stable
    polynomial.
    """
    coeffs = np.array(a, dtype=np.float64)
    while coeffs.size:
        k = coeffs[-1]
        if abs(k) >= 1.0:
            return False
        head = coeffs[:-1]
        coeffs = (head - k * head[::-1]) / (1.0 - k * k)
    return True


@dataclass(frozen=True, eq=False)
class ShapingFilter:
    """All-pole shaping filter 1 / A(z) given by its recursive coefficients.

    `a` holds a_1..a_p of A(z) = 1 + a_1 z^-1 + ... + a_p z^-p.  The filter
    is applied as y[n] = x[n] - sum a_k y[n-k]; inverse_shape applies A(z)
    itself, which undoes the shaping exactly.  Construction rejects
    non-finite coefficients and poles on or outside the unit circle.
    """

    a: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        if a.ndim != 1:
            raise ValueError("coefficients must be 1-D")
        if not np.all(np.isfinite(a)):
            raise ValueError("coefficients must be finite")
        if a.size and not _is_minimum_phase(a):
            raise ValueError("unstable filter: poles must lie inside the unit circle")
        object.__setattr__(self, "a", a)

    @property
    def order(self) -> int:
        return self.a.size

    def magnitude_db(self, freqs: np.ndarray, fs: float) -> np.ndarray:
        """Magnitude of 1 / A at the given frequencies, in dB."""
        _, h = scipy.signal.freqz(
            [1.0], np.concatenate([[1.0], self.a]), worN=freqs, fs=fs
        )
        return 20.0 * np.log10(np.abs(h))


def assemble_sequence(
    plan: SequencePlan, codes: CodeMatrix, unit: SampledSignal | None = None
) -> SampledSignal:
    """Place code-modulated copies of the unit FVN every period_no samples.

    Repetition r (0-based) starts at sample r * period_no with polarity
    row[r mod n].  The buffer is repetitions * period_no samples plus
    whatever tail of the final copy sticks out.  repetitions must cover one
    full code period plus two guard periods at each end, i.e. n + 4, so the
    receiver can discard edge transients and still average a code-aligned
    block.  When no `unit` is given, the FVN synthesized from the plan is
    unwrapped with center_pulse first, so the emitted pulse is a compact
    finite signal; an explicit `unit` (a test impulse, or a pulse prepared
    by the caller) is placed exactly as given.
    """
    row = codes.row(plan.code_row_index)
    n = codes.length
    if plan.repetitions < n + 4:
        raise ValueError(
            f"repetitions must be >= code length + 4 guards ({n + 4}), "
            f"got {plan.repetitions}"
        )
    if unit is None:
        unit = center_pulse(synthesize_unit_fvn(plan.fvn_spec))
    pulse = unit.samples
    p = plan.period_no
    length = plan.repetitions * p + max(0, pulse.size - p)
    out = np.zeros(length)
    for r in range(plan.repetitions):
        out[r * p : r * p + pulse.size] += row[r % n] * pulse
    return SampledSignal(out, unit.fs)


def multiplex(signals: list[SampledSignal]) -> SampledSignal:
    """Samplewise sum of the given signals, zero-padded to the longest."""
    if not signals:
        raise ValueError("nothing to multiplex")
    fs = signals[0].fs
    if any(s.fs != fs for s in signals):
        raise ValueError("cannot multiplex signals with different sample rates")
    length = max(len(s) for s in signals)
    out = np.zeros(length)
    for s in signals:
        out[: len(s)] += s.samples
    return SampledSignal(out, fs)


def shape_spectrum(signal: SampledSignal, filt: ShapingFilter) -> SampledSignal:
    """Run the signal through 1 / A(z) from initial rest."""
    shaped = scipy.signal.lfilter(
        [1.0], np.concatenate([[1.0], filt.a]), signal.samples
    )
    return SampledSignal(shaped, signal.fs)


def inverse_shape(signal: SampledSignal, filt: ShapingFilter) -> SampledSignal:
    """Undo shape_spectrum by applying A(z); exact up to rounding."""
    restored = scipy.signal.lfilter(
        np.concatenate([[1.0], filt.a]), [1.0], signal.samples
    )
    return SampledSignal(restored, signal.fs)


def _reflection_to_poly(k: np.ndarray) -> np.ndarray:
    """Levinson step-up: reflection coefficients to a_1..a_p."""
    a = np.zeros(0)
    for km in k:
        a = np.concatenate([a + km * a[::-1], [km]])
    return a


def design_slope_filter(
    db_per_octave: float,
    fs: float,
    order: int = 32,
    f_lo: float = 50.0,
    f_hi: float = 10000.0,
    n_grid: int = 384,
) -> ShapingFilter:
    """Fit an all-pole filter to a constant dB/octave magnitude slope.

    Least squares on a log-spaced frequency grid over [f_lo, f_hi], with
    the absolute gain left free (only the slope matters; shaping gain is
    arbitrary).  The filter is parameterized by reflection coefficients
    mapped through tanh, so every iterate is stable by construction, and
    the optimization climbs a ladder of increasing orders, each warm-started
    from the previous solution, which keeps the final high-order fit from
    wandering into poor local minima.

    An all-pole response has no zeros to level off with, so it tracks a
    fractional slope as a staircase of gentle resonances; expect a maximum
    deviation around 1.3 dB at the default order over the default band.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0 < f_lo < f_hi < fs / 2:
        raise ValueError("need 0 < f_lo < f_hi < fs / 2")
    grid = np.logspace(np.log10(f_lo), np.log10(f_hi), n_grid)
    target = db_per_octave * np.log2(grid / f_hi)
    # Slightly inside +-1 so saturated coefficients cannot push a pole onto
    # the unit circle through rounding (steep slopes want a pole at DC).
    squash = 0.9995

    def residual(theta: np.ndarray, p: int) -> np.ndarray:
        a = _reflection_to_poly(squash * np.tanh(theta[:p]))
        _, h = scipy.signal.freqz(
            [1.0], np.concatenate([[1.0], a]), worN=grid, fs=fs
        )
        return 20.0 * np.log10(np.abs(h)) + theta[p] - target

    ladder = [p for p in (4, 8, 12, 16, 20, 24, 32, 40) if p < order] + [order]
    theta = np.array([np.mean(target)])
    prev = 0
    for p in ladder:
        start = np.zeros(p + 1)
        start[:prev] = theta[:prev]
        start[p] = theta[prev]
        fit = scipy.optimize.least_squares(
            residual, start, args=(p,), method="lm", max_nfev=40000
        )
        theta, prev = fit.x, p
    return ShapingFilter(_reflection_to_poly(squash * np.tanh(theta[:order])))
