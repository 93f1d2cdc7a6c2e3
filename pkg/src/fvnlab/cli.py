"""File-based measurement pipelines behind one console command.

Subcommands: generate, simulate, measure, analyze, align, selftest.  Audio
moves as 32-bit float mono WAV; every generated signal set carries a JSON
manifest (seeds, code rows, period length) and measuring without one is
refused.  Exit codes: 0 success, 1 validation error, 2 processing error,
3 selftest failure.  The environment variable FVNLAB_SEED overrides any
configured seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio, selftest
from .align import apply_warp, build_probe, build_warp_map, track_phase
from .codes import CodeMatrix, build_code_matrix
from .fvn import FvnSpec, center_pulse, synthesize_unit_fvn
from .measure import demultiplex, separate_nonlinear
from .sequence import (
    SequencePlan,
    ShapingFilter,
    assemble_sequence,
    inverse_shape,
    multiplex,
    shape_spectrum,
)
from .signal import SampledSignal
from .sim import DriftSpec, SimTarget, simulate
from .spectrum import power_spectrum, third_octave_smooth

GENERATE_DEFAULTS = {
    "fs": 44100.0,
    "sigma_t": 0.010,
    "codes": 1,
    "period_no": 22050,
    "reps": 16,
    "seed": 0,
    "shape": None,
}


def _resolve_config(args, defaults: dict) -> dict:
    """defaults < JSON config file < flags < FVNLAB_SEED."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())
        unknown = sorted(set(doc) - set(defaults))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(doc)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    env_seed = os.environ.get("FVNLAB_SEED")
    if env_seed is not None and "seed" in cfg:
        cfg["seed"] = int(env_seed)
    return cfg


def _manifest_path(arg: str) -> Path:
    path = Path(arg)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.is_file():
        raise ValueError(f"no manifest at {path}; measurement needs provenance")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _channels_from_manifest(
    manifest: dict, with_signals: bool
) -> tuple[CodeMatrix, list[SampledSignal], list[SampledSignal]]:
    """Rebuild unit pulses (and optionally the emitted signals) from a manifest."""
    codes = build_code_matrix(int(manifest["codes"]))
    filt = None
    if manifest.get("shape"):
        filt = ShapingFilter(np.asarray(manifest["shape"], dtype=np.float64))
    units = []
    signals = []
    for channel in manifest["channels"]:
        spec = FvnSpec(
            sigma_t=float(manifest["sigma_t"]),
            fs=float(manifest["fs"]),
            seed=int(channel["seed"]),
        )
        unit = center_pulse(synthesize_unit_fvn(spec))
        units.append(unit)
        if with_signals:
            plan = SequencePlan(
                fvn_spec=spec,
                code_row_index=int(channel["code_row"]),
                period_no=int(manifest["period_no"]),
                repetitions=int(manifest["repetitions"]),
            )
            signal = assemble_sequence(plan, codes, unit=unit)
            if filt is not None:
                signal = shape_spectrum(signal, filt)
            signals.append(signal)
    return codes, units, signals


def _check_fs(recorded: SampledSignal, manifest: dict) -> None:
    if abs(recorded.fs - float(manifest["fs"])) > 1e-6:
        raise ValueError(
            f"recording rate {recorded.fs} does not match manifest {manifest['fs']}"
        )


def cmd_generate(args) -> int:
    cfg = _resolve_config(args, GENERATE_DEFAULTS)
    out = _out_dir(args)
    filt = fileio.read_filter(cfg["shape"]) if cfg["shape"] else None
    codes = build_code_matrix(int(cfg["codes"]))
    signals = []
    channels = []
    for i in range(codes.rows):
        spec = FvnSpec(
            sigma_t=float(cfg["sigma_t"]), fs=float(cfg["fs"]), seed=int(cfg["seed"]) + i
        )
        plan = SequencePlan(
            fvn_spec=spec,
            code_row_index=i,
            period_no=int(cfg["period_no"]),
            repetitions=int(cfg["reps"]),
        )
        signal = assemble_sequence(
            plan, codes, unit=center_pulse(synthesize_unit_fvn(spec))
        )
        if filt is not None:
            signal = shape_spectrum(signal, filt)
        name = f"channel_{i}.wav"
        fileio.write_wav(out / name, signal)
        signals.append(signal)
        channels.append({"file": name, "seed": spec.seed, "code_row": i})
    if len(signals) > 1:
        fileio.write_wav(out / "multiplexed.wav", multiplex(signals))
    manifest = {
        "fs": float(cfg["fs"]),
        "sigma_t": float(cfg["sigma_t"]),
        "codes": int(cfg["codes"]),
        "period_no": int(cfg["period_no"]),
        "repetitions": int(cfg["reps"]),
        "seed": int(cfg["seed"]),
        "channels": channels,
        "shape": filt.a.tolist() if filt is not None else None,
    }
    fileio.write_manifest(out / "manifest.json", manifest)
    extra = " + multiplexed.wav" if len(signals) > 1 else ""
    print(f"wrote {len(signals)} channel(s){extra} and manifest.json to {out}")
    return 0


def cmd_simulate(args) -> int:
    manifest = fileio.read_manifest(_manifest_path(args.manifest))
    base = _manifest_path(args.manifest).parent
    inputs = [fileio.read_wav(base / ch["file"]) for ch in manifest["channels"]]
    if args.config:
        target = SimTarget.from_json(args.config)
    else:
        target = SimTarget(paths=[np.array([1.0])] * len(inputs))
    if args.drift_ppm is not None:
        target = replace(target, drift=DriftSpec("linear", ppm=args.drift_ppm))
    if len(target.paths) == len(inputs):
        drive = inputs
    elif len(target.paths) == 1 and len(inputs) > 1:
        # one transducer: the mixed feed drives the single path
        drive = [multiplex(inputs)]
    else:
        raise ValueError(
            f"target has {len(target.paths)} paths for {len(inputs)} channels"
        )
    seed = int(manifest["seed"]) if args.seed is None else args.seed
    env_seed = os.environ.get("FVNLAB_SEED")
    if env_seed is not None:
        seed = int(env_seed)
    recorded = simulate(target, drive, seed=seed)
    out = _out_dir(args)
    fileio.write_wav(out / "recording.wav", recorded)
    manifest = dict(manifest)
    manifest["simulate"] = {
        "target": str(args.config) if args.config else "identity",
        "seed": seed,
        "drift_ppm": args.drift_ppm,
    }
    fileio.write_manifest(out / "manifest.json", manifest)
    print(f"wrote recording.wav ({recorded.duration:.2f} s) to {out}")
    return 0


def cmd_measure(args) -> int:
    manifest = fileio.read_manifest(_manifest_path(args.manifest))
    recorded = fileio.read_wav(args.recording)
    _check_fs(recorded, manifest)
    codes, units, _ = _channels_from_manifest(manifest, with_signals=False)
    if manifest.get("shape"):
        filt = ShapingFilter(np.asarray(manifest["shape"], dtype=np.float64))
        recorded = inverse_shape(recorded, filt)
    rows = [int(ch["code_row"]) for ch in manifest["channels"]]
    result = demultiplex(
        recorded,
        units,
        codes,
        int(manifest["period_no"]),
        code_row_indices=rows,
        total_periods=int(manifest["repetitions"]),
    )
    if len(units) > 1:  # the linear/nonlinear split needs several codes
        result = separate_nonlinear(result)
    out = _out_dir(args)
    fileio.write_wav(out / "linear_ir.wav", result.linear_ir)
    for row, ir in zip(rows, result.per_code_irs):
        fileio.write_wav(out / f"per_code_ir_{row}.wav", ir)
    report = {
        "fs": recorded.fs,
        "period_no": result.period_no,
        "periods_averaged": result.periods_averaged,
        "code_rows": rows,
        "linear_ir_rms": result.linear_ir.rms(),
        "per_code_rms": [ir.rms() for ir in result.per_code_irs],
    }
    if result.deviations is not None:
        for row, dev in zip(rows, result.deviations):
            fileio.write_wav(out / f"deviation_{row}.wav", dev)
        report["deviation_rms"] = [float(r) for r in result.deviation_rms]
        report["pooled_deviation_rms"] = float(
            np.sqrt(np.mean(np.stack([d.samples for d in result.deviations]) ** 2))
        )
    fileio.write_report(out / "report.json", report)
    print(
        f"wrote linear_ir.wav + {len(rows)} per-code IR(s) to {out} "
        f"({result.periods_averaged} periods averaged)"
    )
    return 0


def cmd_analyze(args) -> int:
    ir = fileio.read_wav(args.ir)
    length = None
    if args.truncate_ms is not None:
        length = int(round(args.truncate_ms * 1e-3 * ir.fs))
    smoothed = third_octave_smooth(power_spectrum(ir, analysis_length=length))
    out = _out_dir(args)
    fileio.write_spectrum_csv(out / "spectrum.csv", smoothed.freqs, smoothed.level_db)
    print(
        f"wrote spectrum.csv ({smoothed.freqs.size} bands, "
        f"{smoothed.freqs[0]:.0f}..{smoothed.freqs[-1]:.0f} Hz) to {out}"
    )
    return 0


def cmd_align(args) -> int:
    manifest = fileio.read_manifest(_manifest_path(args.manifest))
    recorded = fileio.read_wav(args.recording)
    _check_fs(recorded, manifest)
    _, _, signals = _channels_from_manifest(manifest, with_signals=True)
    reference = multiplex(signals) if len(signals) > 1 else signals[0]
    fs = recorded.fs
    period = int(manifest["period_no"])
    # Alternating code rows carry their energy at half-fundamental offsets,
    # inside the standard probe's envelope mainlobe, which wobbles the
    # tracked phase on short records.  A half-bandwidth probe puts its first
    # null exactly on those sidebands but doubles the edge trims, so it is
    # only picked when at least half the record survives them (roughly two
    # dozen periods).
    c_mag = 1.0
    if len(signals) > 1:
        narrow = build_probe(fs / period, 0.5, fs)
        if min(len(recorded), len(reference)) >= 4 * narrow.half:
            c_mag = 0.5
    probe = build_probe(fs / period, c_mag, fs)
    try:
        warp = build_warp_map(
            track_phase(reference, probe), track_phase(recorded, probe)
        )
    except ValueError as exc:
        raise RuntimeError(f"alignment failed: {exc}") from exc
    slope, intercept = warp.linear_fit()
    margin = 4.0 * period / fs + 0.1
    aligned = apply_warp(
        recorded, warp.extended(-margin, recorded.duration + margin)
    )
    out = _out_dir(args)
    fileio.write_wav(out / "aligned.wav", aligned)
    decimate = max(1, warp.t_ad.size // 20000)
    fileio.write_warp_csv(out / "warp.csv", warp.t_ad, warp.t_da, decimate=decimate)
    report = {
        "slope": slope,
        "intercept_s": intercept,
        "drift_ppm": (slope - 1.0) * 1e6,
    }
    fileio.write_report(out / "report.json", report)
    print(
        f"wrote aligned.wav and warp.csv to {out} "
        f"(drift {report['drift_ppm']:+.2f} ppm)"
    )
    return 0


def cmd_selftest(args) -> int:
    return 0 if selftest.run_all() else 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on flag mistakes; here those are validation errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fvnlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    gen = sub.add_parser("generate", help="synthesize test signals + manifest")
    gen.add_argument("--config", help="JSON file with generation parameters")
    gen.add_argument("--fs", type=float, help="sample rate in Hz")
    gen.add_argument("--sigma-t", dest="sigma_t", type=float, help="pulse spread in s")
    gen.add_argument("--codes", type=int, help="number of code-multiplexed channels")
    gen.add_argument("--period-no", dest="period_no", type=int, help="period in samples")
    gen.add_argument("--reps", type=int, help="repetitions per channel")
    gen.add_argument("--seed", type=int, help="base seed (channel i uses seed + i)")
    gen.add_argument("--shape", help="JSON shaping-filter file (see design_slope_filter)")
    gen.add_argument("--out-dir", dest="out_dir", required=True)
    gen.set_defaults(func=cmd_generate)

    sim = sub.add_parser("simulate", help="play signals through a simulated target")
    sim.add_argument("manifest", help="manifest file or generate output directory")
    sim.add_argument("--config", help="JSON target description (default: identity)")
    sim.add_argument("--seed", type=int, help="noise seed (default: manifest seed)")
    sim.add_argument(
        "--drift-ppm", dest="drift_ppm", type=float, help="add linear clock drift"
    )
    sim.add_argument("--out-dir", dest="out_dir", required=True)
    sim.set_defaults(func=cmd_simulate)

    mea = sub.add_parser("measure", help="demultiplex a recording into IRs")
    mea.add_argument("recording", help="recorded WAV file")
    mea.add_argument("manifest", help="manifest file or directory")
    mea.add_argument("--out-dir", dest="out_dir", required=True)
    mea.set_defaults(func=cmd_measure)

    ana = sub.add_parser("analyze", help="third-octave spectrum of an IR")
    ana.add_argument("ir", help="impulse-response WAV file")
    ana.add_argument(
        "--truncate-ms",
        dest="truncate_ms",
        type=float,
        help="analyze only the first N milliseconds",
    )
    ana.add_argument("--out-dir", dest="out_dir", required=True)
    ana.set_defaults(func=cmd_analyze)

    ali = sub.add_parser("align", help="estimate and undo clock drift")
    ali.add_argument("recording", help="recorded WAV file")
    ali.add_argument("manifest", help="manifest file or directory")
    ali.add_argument("--out-dir", dest="out_dir", required=True)
    ali.set_defaults(func=cmd_align)

    sub.add_parser("selftest", help="run the acceptance suite").set_defaults(
        func=cmd_selftest
    )
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
