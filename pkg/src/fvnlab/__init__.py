"""fvnlab: acoustic measurement with frequency-domain velvet noise.

All-pass unit test signals, orthogonal-code multiplexing, pulse-compression
measurement with nonlinearity separation, fractional-octave smoothing, and
converter clock-drift alignment, plus a simulation harness to exercise the
whole chain.
"""

from .align import (
    AnalyticProbe,
    PhaseTrajectory,
    WarpMap,
    apply_warp,
    build_probe,
    build_warp_map,
    instantaneous_frequency,
    track_phase,
)
from .codes import CodeMatrix, build_code_matrix, verify_orthogonality
from .fvn import (
    EnvelopeDiagnostics,
    SIX_TERM_COEFFS,
    FvnSpec,
    OvnSpec,
    PhaseSpectrum,
    center_pulse,
    envelope_diagnostics,
    fvn_phase,
    generate_ovn,
    phase_unit,
    synthesize_unit_fvn,
)
from .measure import (
    MeasurementResult,
    demultiplex,
    noise_floor,
    pulse_compress,
    separate_nonlinear,
    synchronized_average,
)
from .sequence import (
    SequencePlan,
    ShapingFilter,
    assemble_sequence,
    design_slope_filter,
    inverse_shape,
    multiplex,
    shape_spectrum,
)
from .signal import SampledSignal
from .sim import DriftSpec, NoiseSpec, SimTarget, apply_drift, simulate
from .spectrum import (
    PowerSpectrum,
    SmoothedSpectrum,
    power_spectrum,
    third_octave_smooth,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticProbe",
    "CodeMatrix",
    "DriftSpec",
    "EnvelopeDiagnostics",
    "FvnSpec",
    "MeasurementResult",
    "NoiseSpec",
    "OvnSpec",
    "PhaseSpectrum",
    "PhaseTrajectory",
    "PowerSpectrum",
    "SIX_TERM_COEFFS",
    "SampledSignal",
    "SequencePlan",
    "ShapingFilter",
    "SimTarget",
    "SmoothedSpectrum",
    "WarpMap",
    "apply_drift",
    "apply_warp",
    "assemble_sequence",
    "build_code_matrix",
    "build_probe",
    "build_warp_map",
    "center_pulse",
    "demultiplex",
    "design_slope_filter",
    "envelope_diagnostics",
    "fvn_phase",
    "generate_ovn",
    "instantaneous_frequency",
    "inverse_shape",
    "multiplex",
    "noise_floor",
    "phase_unit",
    "power_spectrum",
    "pulse_compress",
    "separate_nonlinear",
    "shape_spectrum",
    "simulate",
    "synchronized_average",
    "synthesize_unit_fvn",
    "third_octave_smooth",
    "track_phase",
    "verify_orthogonality",
]
