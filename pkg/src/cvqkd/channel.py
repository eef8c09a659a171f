"""Fiber channel, free-running lasers and heterodyne detector model.

Sample-domain units are chosen so that, after the receiver's downconversion
(``2 * exp(-i w k)``) and unit-energy matched filter, shot noise has
variance 2 per quadrature and a transmitted symbol ``s`` appears as
``sqrt(tau * eta) * s``. Dividing by the shot-noise scale therefore gives
the usual heterodyne SNU picture: signal ``tau * eta / 2 * V_mod``, vacuum 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LinkParams, RngStream, SampledTrace, TraceKind, apply_frequency_response


@dataclass(frozen=True)
class ChannelParams:
    """Untrusted channel and laser parameters.

    ``xi_out`` is the excess noise per quadrature at the channel output
    (SNU). With the trusted-efficiency referral used by
    :class:`~cvqkd.core.LinkParams`, ``xi_out = u / tau``.
    ``lo_offset_hz`` is the LO frequency relative to Alice's carrier.
    """

    eta: float = 0.049
    xi_out: float = 0.0013 / 0.68
    linewidth_tx_hz: float = 100.0
    linewidth_lo_hz: float = 100.0
    lo_offset_hz: float = -180e6
    delay_samples: int = 137

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.xi_out < 0:
            raise ValueError("xi_out must be non-negative")
        if self.linewidth_tx_hz < 0 or self.linewidth_lo_hz < 0:
            raise ValueError("linewidths must be non-negative")
        if self.delay_samples < 0:
            raise ValueError("delay_samples must be non-negative")

    @property
    def combined_linewidth_hz(self) -> float:
        return self.linewidth_tx_hz + self.linewidth_lo_hz

    @classmethod
    def from_link(cls, link: LinkParams, **kw) -> "ChannelParams":
        return cls(eta=link.eta, xi_out=link.u / link.tau, **kw)


@dataclass(frozen=True)
class DetectorParams:
    """Trusted heterodyne receiver. ``t`` is per quadrature at the output."""

    tau: float = 0.68
    t: float = 0.058
    bandwidth_3db_hz: float = 365e6
    filter_order: int = 2
    shot_noise: bool = True

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if not self.bandwidth_3db_hz > 0 or self.filter_order < 1:
            raise ValueError("invalid detector filter")

    def response(self, f_hz) -> np.ndarray:
        """Zero-phase amplitude response of the detector (Butterworth magnitude)."""
        x = np.abs(np.asarray(f_hz, dtype=float)) / self.bandwidth_3db_hz
        return 1.0 / np.sqrt(1.0 + x ** (2 * self.filter_order))

    def noise_psd(self, f_hz) -> np.ndarray:
        """Expected vacuum-trace PSD, as per-sample variance density (flat = variance)."""
        level = (1.0 if self.shot_noise else 0.0) + self.t
        return level * self.response(f_hz) ** 2


@dataclass(frozen=True)
class PhaseTrajectory:
    phases: np.ndarray
    combined_linewidth_hz: float


def phase_walk(
    rng: RngStream, n: int, combined_linewidth_hz: float, sample_rate_hz: float
) -> PhaseTrajectory:
    """Wiener phase: uniform start, increments N(0, 2 pi dnu / fs)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if combined_linewidth_hz < 0:
        raise ValueError("linewidth must be non-negative")
    phi0 = rng.uniform(0.0, 2 * np.pi)
    var = 2 * np.pi * combined_linewidth_hz / sample_rate_hz
    steps = rng.normal(np.sqrt(var), n - 1)
    phases = phi0 + np.concatenate([[0.0], np.cumsum(steps)])
    return PhaseTrajectory(phases, combined_linewidth_hz)


def apply_channel(
    tx: SampledTrace,
    ch: ChannelParams,
    rng: RngStream,
    phase_rng: RngStream | None = None,
) -> tuple[SampledTrace, PhaseTrajectory]:
    """Attenuate, add excess noise, delay, and beat against the free-running LO.

    Returns the complex field at the detector (already carrying the LO
    beat) and the relative laser phase applied to each output sample.
    """
    x = np.asarray(tx.samples, dtype=complex)
    out = np.concatenate([np.zeros(ch.delay_samples, dtype=complex), np.sqrt(ch.eta) * x])
    n = out.size
    if ch.xi_out > 0:
        out = out + rng.complex_normal(ch.xi_out, n)
    phase = phase_walk(phase_rng or rng, n, ch.combined_linewidth_hz, tx.sample_rate_hz)
    k = np.arange(n)
    beat = -2 * np.pi * ch.lo_offset_hz / tx.sample_rate_hz * k
    out = out * np.exp(1j * (beat + phase.phases))
    trace = SampledTrace(tx.sample_rate_hz, out, TraceKind.MODULATED, tx.delay + ch.delay_samples)
    return trace, phase


def _lowpass(x: np.ndarray, det: DetectorParams, fs: float) -> np.ndarray:
    return apply_frequency_response(x, fs, det.response)


def heterodyne_detect(
    rx: SampledTrace | None,
    det: DetectorParams,
    rng: RngStream,
    electronic_rng: RngStream | None = None,
    *,
    n: int | None = None,
    sample_rate_hz: float | None = None,
    signal_bands: list[tuple[float, float]] | None = None,
    kind: TraceKind = TraceKind.MODULATED,
    shot_noise: bool | None = None,
) -> SampledTrace:
    """Real photocurrent of the RF heterodyne detector.

    ``rx=None`` records a signal-free trace of length ``n``. Shot noise
    (variance 1 per sample) comes from ``rng``, electronic noise (variance
    ``t``) from ``electronic_rng``; the detector response is applied last.
    """
    if rx is not None:
        fs = rx.sample_rate_hz
        n = len(rx)
        delay = rx.delay
    else:
        if n is None or sample_rate_hz is None:
            raise ValueError("signal-free detection needs n and sample_rate_hz")
        fs, delay = sample_rate_hz, 0
    if signal_bands:
        hi = 1.2 * det.bandwidth_3db_hz
        for lo_f, hi_f in signal_bands:
            if lo_f < 0 or hi_f > min(hi, fs / 2):
                raise ValueError(f"band [{lo_f}, {hi_f}] Hz lies outside the detector bandwidth")
    shot = det.shot_noise if shot_noise is None else shot_noise
    y = np.zeros(n)
    if rx is not None:
        y += np.sqrt(det.tau) * rx.samples.real
    if shot:
        y += rng.normal(1.0, n)
    if det.t > 0:
        y += (electronic_rng or rng).normal(np.sqrt(det.t), n)
    return SampledTrace(fs, _lowpass(y, det, fs), kind, delay)


@dataclass(frozen=True)
class TraceSet:
    modulated: SampledTrace
    vacuum: SampledTrace
    electronic: SampledTrace
    phase: PhaseTrajectory


def generate_trace_set(
    tx: SampledTrace,
    ch: ChannelParams,
    det: DetectorParams,
    streams: dict[str, RngStream],
    signal_bands: list[tuple[float, float]] | None = None,
) -> TraceSet:
    """Modulated, vacuum and electronic-noise recordings of equal length.

    ``streams`` must provide the purposes ``excess``, ``phase``, ``shot``,
    ``electronic``, ``vacuum_shot``, ``vacuum_electronic`` and
    ``electronic_trace``.
    """
    rx, phase = apply_channel(tx, ch, streams["excess"], streams["phase"])
    fs, n = rx.sample_rate_hz, len(rx)
    modulated = heterodyne_detect(
        rx, det, streams["shot"], streams["electronic"], signal_bands=signal_bands
    )
    vacuum = heterodyne_detect(
        None, det, streams["vacuum_shot"], streams["vacuum_electronic"],
        n=n, sample_rate_hz=fs, kind=TraceKind.VACUUM, shot_noise=True,
    )
    electronic = heterodyne_detect(
        None, det, streams["electronic_trace"], streams["electronic_trace"],
        n=n, sample_rate_hz=fs, kind=TraceKind.ELECTRONIC, shot_noise=False,
    )
    return TraceSet(modulated, vacuum, electronic, phase)


def beat_frequencies(f_shift_hz: float, f_pilot_hz: float, lo_offset_hz: float) -> tuple[float, float]:
    """Quantum-band and pilot beat notes at the detector output."""
    return f_shift_hz - lo_offset_hz, f_pilot_hz - lo_offset_hz
