"""Simulated measurement targets: linear paths, memoryless nonlinearity,
additive noise, and converter clock drift.

Each path applies a memoryless polynomial to its input and convolves with
its FIR (a Hammerstein model); path outputs sum.  Drift then warps the
sampling clock and noise is added last, so the noise is clean of drift as
it would be in a real capture chain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.signal

from .resample import resample_at, upsample2
from .signal import SampledSignal


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise: kind 'white' or 'pink', level in dB re signal RMS."""

    kind: str
    level_db: float

    def __post_init__(self):
        if self.kind not in ("white", "pink"):
            raise ValueError(f"unknown noise kind {self.kind!r}")


@dataclass(frozen=True)
class DriftSpec:
    """Clock drift: 'linear' (ppm) or 'sinusoidal' (depth_s, rate_hz).

    Linear drift reads the source at t * (1 + ppm * 1e-6); sinusoidal drift
    at t + depth_s * sin(2 pi rate_hz t).  A sinusoidal modulation with
    depth_s * 2 pi rate_hz >= 1 would fold time back on itself and is
    rejected.
    """

    kind: str
    ppm: float = 0.0
    depth_s: float = 0.0
    rate_hz: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "sinusoidal"):
            raise ValueError(f"unknown drift kind {self.kind!r}")
        if self.kind == "sinusoidal":
            if self.depth_s * 2.0 * np.pi * self.rate_hz >= 1.0:
                raise ValueError(
                    "sinusoidal drift too deep: depth_s * 2 pi rate_hz must be < 1"
                )


@dataclass(frozen=True, eq=False)
class SimTarget:
    """A bank of Hammerstein paths plus capture-chain impairments.

    nonlinearity lists polynomial coefficients [c1, c2, ...] applied as
    c1 x + c2 x^2 + ...; the default [1] is the identity.  Path FIRs should
    stay shorter than the measurement period they will be probed with.
    """

    paths: list[np.ndarray]
    nonlinearity: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    noise: NoiseSpec | None = None
    drift: DriftSpec | None = None

    def __post_init__(self):
        if not self.paths:
            raise ValueError("target needs at least one path FIR")
        paths = [np.asarray(p, dtype=np.float64) for p in self.paths]
        if any(p.ndim != 1 or p.size < 1 for p in paths):
            raise ValueError("each path FIR must be a non-empty 1-D array")
        poly = np.atleast_1d(np.asarray(self.nonlinearity, dtype=np.float64))
        if poly.size < 1:
            raise ValueError("nonlinearity needs at least the linear coefficient")
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "nonlinearity", poly)

    def to_json(self, path: str | Path) -> None:
        doc: dict = {
            "paths": [p.tolist() for p in self.paths],
            "nonlinearity": self.nonlinearity.tolist(),
        }
        if self.noise is not None:
            doc["noise"] = {"kind": self.noise.kind, "level_db": self.noise.level_db}
        if self.drift is not None:
            doc["drift"] = {
                "kind": self.drift.kind,
                "ppm": self.drift.ppm,
                "depth_s": self.drift.depth_s,
                "rate_hz": self.drift.rate_hz,
            }
        Path(path).write_text(json.dumps(doc, indent=2))

    @classmethod
    def from_json(cls, path: str | Path) -> "SimTarget":
        doc = json.loads(Path(path).read_text())
        noise = doc.get("noise")
        drift = doc.get("drift")
        return cls(
            paths=[np.asarray(p, dtype=np.float64) for p in doc["paths"]],
            nonlinearity=np.asarray(doc.get("nonlinearity", [1.0])),
            noise=NoiseSpec(**noise) if noise else None,
            drift=DriftSpec(**drift) if drift else None,
        )


def _polynomial(x: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(x)
    term = np.ones_like(x)
    for c in coeffs:
        term = term * x
        acc += c * term
    return acc


def apply_drift(signal: SampledSignal, drift: DriftSpec) -> SampledSignal:
    """Resample through the drifted clock (length preserved).

    As in apply_warp, the signal is upsampled 2x before the windowed-sinc
    evaluation so full-band content is not shaved by the kernel rolloff.
    """
    n = len(signal)
    t = np.arange(n, dtype=np.float64)
    if drift.kind == "linear":
        positions = t * (1.0 + drift.ppm * 1e-6)
    else:
        positions = t + drift.depth_s * signal.fs * np.sin(
            2.0 * np.pi * drift.rate_hz * t / signal.fs
        )
    return SampledSignal(
        resample_at(upsample2(signal.samples), 2.0 * positions), signal.fs
    )


def simulate(
    target: SimTarget, inputs: list[SampledSignal], seed: int = 0
) -> SampledSignal:
    """Play the inputs through the target and capture the result.

    One input per path is required; use the same signal object repeatedly
    to drive several paths from a common stimulus.  The output is long
    enough for every path's convolution tail.  Noise is seeded, so a run is
    reproducible bit for bit.
    """
    if len(inputs) != len(target.paths):
        raise ValueError(
            f"target has {len(target.paths)} paths but {len(inputs)} inputs given"
        )
    fs = inputs[0].fs
    if any(s.fs != fs for s in inputs):
        raise ValueError("all inputs must share one sample rate")
    length = max(
        len(s) + fir.size - 1 for s, fir in zip(inputs, target.paths)
    )
    acc = np.zeros(length)
    for s, fir in zip(inputs, target.paths):
        driven = _polynomial(s.samples, target.nonlinearity)
        out = scipy.signal.fftconvolve(driven, fir)
        acc[: out.size] += out
    captured = SampledSignal(acc, fs)
    if target.drift is not None:
        captured = apply_drift(captured, target.drift)
    if target.noise is not None:
        noise = _generate_noise(
            captured.samples.size, fs, target.noise, np.random.default_rng(seed)
        )
        level = captured.rms() * 10.0 ** (target.noise.level_db / 20.0)
        captured = SampledSignal(captured.samples + level * noise, fs)
    return captured


def _generate_noise(
    n: int, fs: float, spec: NoiseSpec, rng: np.random.Generator
) -> np.ndarray:
    """Unit-RMS noise; the pink variant tilts white noise by 1/sqrt(f)
    above a 20 Hz shelf."""
    white = rng.standard_normal(n)
    if spec.kind == "white":
        return white
    shaped = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    shaped /= np.sqrt(np.maximum(freqs, 20.0))
    pink = np.fft.irfft(shaped, n)
    return pink / np.sqrt(np.mean(pink**2))
