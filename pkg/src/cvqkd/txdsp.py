"""Transmitter waveform synthesis: GMCS symbols, RRC shaping, up-shift, pilot, DAC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core import RngStream, SampledTrace, TraceKind


@dataclass(frozen=True)
class TxConfig:
    """Digital transmitter settings.

    ``pilot_amplitude`` is relative to the RMS sample amplitude of the
    quantum band (10 means the pilot is 20 dB above it). ``dac_bits = 0``
    disables quantization.
    """

    baud: float = 20e6
    sample_rate_hz: float = 1e9
    rrc_rolloff: float = 0.2
    rrc_span_symbols: int = 32
    f_shift_hz: float = 80e6
    f_pilot_hz: float = 150e6
    pilot_amplitude: float = 10.0
    dac_bits: int = 16
    n_reference: int = 10_000

    def __post_init__(self):
        ratio = self.sample_rate_hz / self.baud
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 2:
            raise ValueError("sample_rate_hz / baud must be an integer >= 2")
        if not 0 < self.rrc_rolloff <= 1:
            raise ValueError("rrc_rolloff must lie in (0, 1]")
        if self.rrc_span_symbols < 4:
            raise ValueError("rrc_span_symbols must be >= 4")
        if self.f_pilot_hz == self.f_shift_hz:
            raise ValueError("pilot and quantum band share a centre frequency")
        nyq = self.sample_rate_hz / 2
        if abs(self.f_shift_hz) + self.quantum_halfwidth_hz >= nyq:
            raise ValueError("quantum band exceeds the Nyquist frequency")
        if abs(self.f_pilot_hz) >= nyq:
            raise ValueError("pilot exceeds the Nyquist frequency")
        if self.pilot_amplitude < 0:
            raise ValueError("pilot_amplitude must be non-negative")
        if self.dac_bits and not 4 <= self.dac_bits <= 24:
            raise ValueError("dac_bits must be 0 or lie in [4, 24]")
        if self.n_reference < 0:
            raise ValueError("n_reference must be non-negative")

    @property
    def sps(self) -> int:
        return int(round(self.sample_rate_hz / self.baud))

    @property
    def quantum_halfwidth_hz(self) -> float:
        return 0.5 * self.baud * (1 + self.rrc_rolloff)

    @classmethod
    def desk(cls, sps: int = 10, baud: float = 20e6, **kw) -> "TxConfig":
        """Frequency plan that fits a low oversampling factor.

        With ``sps`` samples per symbol the quantum band sits at 0.25 baud
        and the pilot at 3 baud (transmitter side).
        """
        if sps < 10:
            raise ValueError("the desk frequency plan needs sps >= 10")
        kw.setdefault("f_shift_hz", 0.25 * baud)
        kw.setdefault("f_pilot_hz", 3.0 * baud)
        return cls(baud=baud, sample_rate_hz=sps * baud, **kw)


def draw_gmcs_symbols(rng: RngStream, n: int, v_mod: float) -> np.ndarray:
    """Gaussian-modulated coherent-state amplitudes, variance ``v_mod`` per quadrature."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if not v_mod > 0:
        raise ValueError("v_mod must be positive")
    return rng.complex_normal(v_mod, n)


def _rrc_value(t: np.ndarray, rolloff: float) -> np.ndarray:
    """Unnormalized RRC impulse response, ``t`` in symbol periods."""
    b = rolloff
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    zero = np.isclose(t, 0.0, atol=1e-12)
    sing = np.isclose(np.abs(t), 1.0 / (4 * b), atol=1e-12)
    reg = ~(zero | sing)
    tr = t[reg]
    num = np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))
    den = np.pi * tr * (1 - (4 * b * tr) ** 2)
    out[reg] = num / den
    out[zero] = 1 - b + 4 * b / np.pi
    out[sing] = (b / np.sqrt(2)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
    )
    return out


def rrc_taps(rolloff: float, span_symbols: int, sps: int) -> np.ndarray:
    """Unit-energy root-raised-cosine taps, ``span_symbols * sps + 1`` long."""
    if not 0 < rolloff <= 1:
        raise ValueError("rolloff must lie in (0, 1]")
    if span_symbols < 4 or sps < 2:
        raise ValueError("need span_symbols >= 4 and sps >= 2")
    half = span_symbols * sps // 2
    k = np.arange(-half, half + 1)
    taps = _rrc_value(k / sps, rolloff)
    return taps / np.sqrt(np.sum(taps**2))


def pulse_shape(symbols, cfg: TxConfig) -> SampledTrace:
    """Zero-stuff by ``sps`` and filter with the RRC taps.

    The returned trace has ``len(symbols) * sps + len(taps) - 1`` samples;
    its ``delay`` field points to the centre of the first pulse.
    """
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.size == 0:
        raise ValueError("symbols must be non-empty")
    sps = cfg.sps
    taps = rrc_taps(cfg.rrc_rolloff, cfg.rrc_span_symbols, sps)
    up = np.zeros(symbols.size * sps, dtype=complex)
    up[::sps] = symbols
    out = signal.oaconvolve(up, taps, mode="full")
    return SampledTrace(cfg.sample_rate_hz, out, TraceKind.MODULATED, delay=(taps.size - 1) // 2)


def frequency_shift(trace: SampledTrace, f_hz: float, bandwidth_hz: float = 0.0) -> SampledTrace:
    """Multiply by a complex exponential at ``f_hz``.

    ``bandwidth_hz`` is the two-sided width of the content being shifted;
    it is checked against the Nyquist band.
    """
    fs = trace.sample_rate_hz
    if abs(f_hz) + bandwidth_hz / 2 >= fs / 2:
        raise ValueError(f"shift by {f_hz} Hz aliases at sample rate {fs} Hz")
    if f_hz == 0:
        return trace
    k = np.arange(len(trace))
    return trace.replace(trace.samples * np.exp(2j * np.pi * f_hz / fs * k))


def add_pilot(
    trace: SampledTrace,
    f_pilot_hz: float,
    amplitude: float,
    quantum_center_hz: float | None = None,
    quantum_halfwidth_hz: float | None = None,
) -> SampledTrace:
    """Add a complex tone of absolute ``amplitude`` at ``f_pilot_hz``."""
    if quantum_center_hz is not None and quantum_halfwidth_hz is not None:
        if abs(f_pilot_hz - quantum_center_hz) <= quantum_halfwidth_hz:
            raise ValueError("pilot tone falls inside the quantum band")
    if abs(f_pilot_hz) >= trace.sample_rate_hz / 2:
        raise ValueError("pilot exceeds the Nyquist frequency")
    if amplitude == 0:
        return trace
    k = np.arange(len(trace))
    tone = amplitude * np.exp(2j * np.pi * f_pilot_hz / trace.sample_rate_hz * k)
    return trace.replace(trace.samples + tone)


def dac_quantize(trace: SampledTrace, bits: int, full_scale: float | None = None) -> SampledTrace:
    """Uniform mid-tread quantization of each real component to ``2**bits`` levels."""
    if not 4 <= bits <= 24:
        raise ValueError("bits must lie in [4, 24]")
    x = trace.samples
    if full_scale is None:
        full_scale = float(np.max(np.abs(x.real)))
        if np.iscomplexobj(x):
            full_scale = max(full_scale, float(np.max(np.abs(x.imag))))
    if full_scale == 0:
        return trace
    step = 2 * full_scale / (2**bits - 1)

    def q(v):
        v = np.clip(v, -full_scale, full_scale)
        return np.round((v + full_scale) / step) * step - full_scale

    if np.iscomplexobj(x):
        return trace.replace(q(x.real) + 1j * q(x.imag))
    return trace.replace(q(x))


def pilot_absolute_amplitude(cfg: TxConfig, v_mod: float) -> float:
    """Pilot amplitude in the same units as the shaped quantum waveform."""
    return cfg.pilot_amplitude * np.sqrt(2 * v_mod / cfg.sps)


@dataclass(frozen=True)
class TxFrame:
    symbols: np.ndarray
    trace: SampledTrace
    pilot_amplitude: float


def transmit_frame(
    rng: RngStream, n_symbols: int, cfg: TxConfig, v_mod: float, pilot: bool = True
) -> TxFrame:
    """Full transmitter chain for one frame."""
    symbols = draw_gmcs_symbols(rng, n_symbols, v_mod)
    trace = pulse_shape(symbols, cfg)
    trace = frequency_shift(trace, cfg.f_shift_hz, 2 * cfg.quantum_halfwidth_hz)
    amp = pilot_absolute_amplitude(cfg, v_mod) if pilot else 0.0
    trace = add_pilot(trace, cfg.f_pilot_hz, amp, cfg.f_shift_hz, cfg.quantum_halfwidth_hz)
    if cfg.dac_bits:
        trace = dac_quantize(trace, cfg.dac_bits)
    return TxFrame(symbols, trace, amp)
