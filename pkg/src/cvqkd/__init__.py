"""Simulation and DSP toolkit for local-local-oscillator CV-QKD links."""
from .core import (
    CalibrationError,
    LinkParams,
    RngStream,
    SampledTrace,
    SymbolFrame,
    TraceKind,
    calibrate_snu,
    frame_stream,
    gaussian_draw,
    trusted_noise_from_traces,
)
from .estimation import (
    KeyRateResult,
    NoiseBudget,
    estimate_channel,
    holevo_bound,
    key_fraction,
    mutual_information,
    phase_excess_noise,
)
from .pipeline import RunConfig, desk_config, paper_config, process_frame, run_frames

__version__ = "0.1.0"
