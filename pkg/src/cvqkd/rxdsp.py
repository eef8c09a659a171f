"""Receiver DSP: whitening, pilot extraction, UKF phase tracking, sync, symbol recovery.

Processing order for a modulated frame:

1. whitening filter designed on the vacuum trace,
2. pilot extraction around its beat note and UKF carrier-phase tracking,
3. downconversion of the quantum band with the tracked phase,
4. RRC matched filter,
5. cross-correlation against the reference symbols (timing + constant phase),
6. downsampling and SNU normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft
from scipy import signal

from .channel import DetectorParams
from .core import (
    SampledTrace,
    SymbolFrame,
    apply_frequency_response,
    calibrate_snu,
    quadrature_variance,
    trusted_noise_from_traces,
)
from .txdsp import TxConfig, rrc_taps


class FrameError(RuntimeError):
    """A frame could not be processed; the pipeline drops it."""


class PilotError(FrameError):
    """Pilot tone missing or too weak for phase tracking."""


class UkfNumericalError(FrameError):
    """UKF covariance lost positive semi-definiteness."""


class SyncError(FrameError):
    """Reference correlation peak not distinguishable from sidelobes."""


# ---------------------------------------------------------------- whitening


@dataclass(frozen=True)
class WhiteningFilter:
    """Zero-phase amplitude equalizer sampled on a one-sided frequency grid."""

    freqs_hz: np.ndarray
    gains: np.ndarray
    sample_rate_hz: float
    regularization: float

    def gain_at(self, f_hz) -> np.ndarray:
        f = np.abs(np.asarray(f_hz, dtype=float))
        return np.exp(np.interp(f, self.freqs_hz, np.log(self.gains)))

    @classmethod
    def from_psd(cls, freqs_hz, psd, sample_rate_hz: float, regularization: float = 1e-3):
        psd = np.asarray(psd, dtype=float)
        if not np.any(psd > 0):
            raise ValueError("PSD is identically zero")
        floor = regularization * psd.max()
        gains = 1.0 / np.sqrt(np.maximum(psd, floor))
        return cls(np.asarray(freqs_hz, dtype=float), gains, sample_rate_hz, regularization)

    @classmethod
    def identity(cls, sample_rate_hz: float):
        return cls(np.array([0.0, sample_rate_hz / 2]), np.ones(2), sample_rate_hz, 0.0)


def design_whitening(
    vacuum: SampledTrace,
    regularization: float = 1e-3,
    nperseg: int = 4096,
    smoothing_degree: int | None = 12,
) -> WhiteningFilter:
    """Whitening filter from the Welch PSD of a vacuum-noise trace.

    The PSD is scaled so that white noise of variance s2 reads s2 at every
    frequency. With ``smoothing_degree`` set, log-PSD is replaced by a
    Chebyshev fit of that degree (the detector response is smooth, the
    periodogram scatter is not).
    """
    x = np.asarray(vacuum.samples)
    if not np.any(x):
        raise ValueError("vacuum trace is identically zero")
    nperseg = min(nperseg, x.size)
    freqs, psd = signal.welch(
        x, fs=vacuum.sample_rate_hz, window="hann", nperseg=nperseg,
        return_onesided=not np.iscomplexobj(x), detrend=False,
    )
    psd = psd * vacuum.sample_rate_hz / (1 if np.iscomplexobj(x) else 2)
    if np.iscomplexobj(x):
        order = np.argsort(freqs)
        freqs, psd = freqs[order], psd[order]
    if smoothing_degree:
        inner = slice(1, -1)
        fit = np.polynomial.Chebyshev.fit(
            freqs[inner], np.log(np.maximum(psd[inner], 1e-300)), smoothing_degree
        )
        psd = np.exp(fit(freqs))
    return WhiteningFilter.from_psd(freqs, psd, vacuum.sample_rate_hz, regularization)


def apply_whitening(trace: SampledTrace, w: WhiteningFilter) -> SampledTrace:
    """Zero-phase application of ``w``; real traces stay real."""
    if not math.isclose(trace.sample_rate_hz, w.sample_rate_hz, rel_tol=1e-12):
        raise ValueError("trace and whitening filter sample rates differ")
    return trace.replace(apply_frequency_response(trace.samples, trace.sample_rate_hz, w.gain_at))


# --------------------------------------------------------------- pilot tone


@dataclass(frozen=True)
class PilotSignal:
    """Complex-baseband pilot, decimated to roughly its extraction bandwidth.

    ``times`` are sample indices of the source trace; ``mix_hz`` is the
    frequency that was mixed to DC (an FFT bin of the source trace).
    """

    trace: SampledTrace
    times: np.ndarray
    mix_hz: float
    amplitude: float
    noise_var: float

    @property
    def snr(self) -> float:
        return self.amplitude**2 / self.noise_var if self.noise_var > 0 else math.inf


def pilot_filter(sample_rate_hz: float, bandwidth_hz: float, attenuation_db: float = 80.0) -> np.ndarray:
    """Linear-phase Kaiser low-pass: flat to ``bandwidth/4``, stop from ``3 bandwidth/4``."""
    numtaps, beta = signal.kaiserord(attenuation_db, 0.5 * bandwidth_hz / (0.5 * sample_rate_hz))
    numtaps |= 1
    return signal.firwin(numtaps, bandwidth_hz / 2, window=("kaiser", beta), fs=sample_rate_hz)


def extract_pilot(
    trace: SampledTrace,
    f_pilot_beat_hz: float,
    bandwidth_hz: float,
    search_hz: float = 0.0,
    guard_hz: float = 50e3,
    quantum_band: tuple[float, float] | None = None,
) -> PilotSignal:
    """Bring the pilot to complex baseband and decimate to about ``bandwidth_hz``.

    The strongest FFT bin within ``search_hz`` of the nominal beat is mixed
    to DC, then a linear-phase low-pass and decimation follow. Filtering in
    the time domain keeps edge transients within one filter length. The
    noise floor is read from the spectrum within the extraction band,
    ``guard_hz`` away from the tone.
    """
    x = np.asarray(trace.samples)
    if np.iscomplexobj(x):
        raise ValueError("extract_pilot expects a real detector trace")
    fs, n = trace.sample_rate_hz, x.size
    if not 0 < f_pilot_beat_hz < fs / 2:
        raise ValueError("pilot beat outside the Nyquist band")
    lo_edge = f_pilot_beat_hz - search_hz - bandwidth_hz
    hi_edge = f_pilot_beat_hz + search_hz + bandwidth_hz
    if quantum_band is not None and lo_edge < quantum_band[1] and hi_edge > quantum_band[0]:
        raise ValueError("pilot extraction band overlaps the quantum band")
    if hi_edge >= fs / 2 or lo_edge <= 0:
        raise ValueError("pilot extraction band exceeds the Nyquist band")

    spec = sp_fft.rfft(x)
    df = fs / n
    k_nom = int(round(f_pilot_beat_hz / df))
    ks = int(round(search_hz / df))
    if ks:
        window = np.abs(spec[k_nom - ks : k_nom + ks + 1]) ** 2
        k0 = k_nom - ks + int(np.argmax(window))
    else:
        k0 = k_nom
    f_mix = k0 * df

    half = max(int(round(bandwidth_hz / 2 / df)), 1)
    g = max(int(round(guard_hz / df)), 2)
    offsets = np.arange(-half, half + 1)
    noise_bins = spec[k0 + offsets[np.abs(offsets) > g]]
    if noise_bins.size == 0:
        raise ValueError("guard band leaves no bins for the noise estimate")
    level = float(np.mean(np.abs(noise_bins) ** 2)) / n

    h = pilot_filter(fs, bandwidth_hz)
    step = max(int(fs // bandwidth_hz), 1)
    z = x * np.exp(-2j * np.pi * f_mix / fs * np.arange(n))
    p = signal.upfirdn(h, z, down=step)
    lag = (h.size - 1) // 2
    times = np.arange(p.size) * step - lag
    keep = (times >= 0) & (times < n)
    p, times = p[keep], times[keep].astype(float)
    noise_var = level * float(np.sum(h**2))
    core = slice(h.size // step + 1, p.size - h.size // step - 1)
    body = p[core] if p[core].size else p
    amp2 = max(float(np.mean(np.abs(body) ** 2)) - noise_var, 0.0)
    out = SampledTrace(fs / step, p)
    return PilotSignal(out, times, f_mix, math.sqrt(amp2), noise_var)


def naive_phase(pilot: SampledTrace) -> np.ndarray:
    """Per-sample argument of the pilot, unwrapped."""
    return np.unwrap(np.angle(pilot.samples))


# --------------------------------------------------------------------- UKF


@dataclass(frozen=True)
class UkfConfig:
    """UKF on the state (phase [rad], frequency [rad/step]).

    Noise terms are per filter step. ``initial_state=None`` starts from the
    argument of the first pilot sample with zero frequency. ``smooth`` adds
    a backward Rauch-Tung-Striebel pass over the filtered track; the process
    model is linear, so the unscented smoother reduces to the linear one.
    """

    process_noise_phase: float
    process_noise_freq: float = 1e-12
    measurement_noise: float = 1e-2
    alpha: float = 1e-3
    beta: float = 2.0
    kappa: float = 0.0
    initial_state: tuple[float, float] | None = None
    initial_covariance: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1e-6))
    smooth: bool = True

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if min(self.process_noise_phase, self.process_noise_freq, self.measurement_noise) < 0:
            raise ValueError("noise variances must be non-negative")
        p = np.asarray(self.initial_covariance, dtype=float)
        if p.shape != (2, 2) or not np.allclose(p, p.T) or np.linalg.eigvalsh(p).min() < 0:
            raise ValueError("initial_covariance must be a symmetric PSD 2x2 matrix")


@dataclass(frozen=True)
class PhaseEstimate:
    phases: np.ndarray
    freqs: np.ndarray = field(default_factory=lambda: np.empty(0))
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    v_est: float = math.nan


def _chol2(a, b, c, tol):
    """Lower Cholesky factor of [[a, b], [b, c]] for PSD input, or None."""
    if a < -tol:
        return None
    l11 = math.sqrt(a) if a > 0 else 0.0
    l21 = b / l11 if l11 > 0 else 0.0
    if l11 == 0 and abs(b) > tol:
        return None
    r = c - l21 * l21
    if r < -tol:
        return None
    return l11, l21, math.sqrt(r) if r > 0 else 0.0


def ukf_track(pilot: SampledTrace, cfg: UkfConfig, amplitude: float | None = None) -> PhaseEstimate:
    """Track pilot phase and frequency with a 2-state unscented Kalman filter.

    Measurement: ``z = A [cos(phase), sin(phase)] + noise`` with
    ``cfg.measurement_noise`` per component. Process: phase integrates the
    frequency, both take independent random-walk increments.
    """
    z = np.asarray(pilot.samples, dtype=complex)
    if z.size == 0:
        raise ValueError("empty pilot")
    r = cfg.measurement_noise
    if amplitude is None:
        amplitude = math.sqrt(max(float(np.mean(np.abs(z) ** 2)) - 2 * r, 0.0))
    amp = float(amplitude)
    if amp <= 0:
        raise PilotError("pilot amplitude is zero")

    nx = 2
    lam = cfg.alpha**2 * (nx + cfg.kappa) - nx
    spread = math.sqrt(nx + lam)
    wm0 = lam / (nx + lam)
    wc0 = wm0 + (1 - cfg.alpha**2 + cfg.beta)
    wi = 1.0 / (2 * (nx + lam))
    qp, qf = cfg.process_noise_phase, cfg.process_noise_freq

    if cfg.initial_state is None:
        th, om = float(np.angle(z[0])), 0.0
    else:
        th, om = map(float, cfg.initial_state)
    (p11, p12), (_, p22) = cfg.initial_covariance

    zr, zi = z.real.tolist(), z.imag.tolist()
    out_th = np.empty(z.size)
    out_om = np.empty(z.size)
    cov = np.empty((z.size, 3))
    cos, sin = math.cos, math.sin

    def factor(a, b, c):
        tol = 1e-9 * max(abs(a), abs(c), 1e-300)
        f = _chol2(a, b, c, tol)
        if f is None:
            f = _chol2(a + 1e-12, b, c + 1e-12, tol)
            if f is None:
                raise UkfNumericalError("state covariance is not positive semi-definite")
        return f

    for k in range(z.size):
        if k:
            # predict; the process model is linear so the transform is exact
            th, om = th + om, om
            p11, p12, p22 = p11 + 2 * p12 + p22 + qp, p12 + p22, p22 + qf
        l11, l21, l22 = factor(p11, p12, p22)
        d1t, d1o = spread * l11, spread * l21
        d2t, d2o = 0.0, spread * l22
        # sigma points: centre, +col1, +col2, -col1, -col2
        sth = (th, th + d1t, th + d2t, th - d1t, th - d2t)
        som = (om, om + d1o, om + d2o, om - d1o, om - d2o)
        zx = [amp * cos(s) for s in sth]
        zy = [amp * sin(s) for s in sth]
        mx = wm0 * zx[0] + wi * (zx[1] + zx[2] + zx[3] + zx[4])
        my = wm0 * zy[0] + wi * (zy[1] + zy[2] + zy[3] + zy[4])
        s11 = s12 = s22 = c11 = c12 = c21 = c22 = 0.0
        for i in range(5):
            w = wc0 if i == 0 else wi
            ex, ey = zx[i] - mx, zy[i] - my
            et, eo = sth[i] - th, som[i] - om
            s11 += w * ex * ex
            s12 += w * ex * ey
            s22 += w * ey * ey
            c11 += w * et * ex
            c12 += w * et * ey
            c21 += w * eo * ex
            c22 += w * eo * ey
        s11 += r
        s22 += r
        det = s11 * s22 - s12 * s12
        if det > 1e-300 * max(s11 * s22, 1e-300) and det > 0:
            i11, i12, i22 = s22 / det, -s12 / det, s11 / det
            k11 = c11 * i11 + c12 * i12
            k12 = c11 * i12 + c12 * i22
            k21 = c21 * i11 + c22 * i12
            k22 = c21 * i12 + c22 * i22
            vx, vy = zr[k] - mx, zi[k] - my
            th += k11 * vx + k12 * vy
            om += k21 * vx + k22 * vy
            # P -= K S K^T  ==  P -= K C^T
            p11 -= k11 * c11 + k12 * c12
            p12 -= k11 * c21 + k12 * c22
            p22 -= k21 * c21 + k22 * c22
        out_th[k] = th
        out_om[k] = om
        cov[k] = p11, p12, p22
    if cfg.smooth:
        out_th, out_om = _rts_smooth(out_th, out_om, cov, qp, qf)
    times = getattr(pilot, "times", None)
    return PhaseEstimate(out_th, out_om, np.arange(z.size) if times is None else times)


def _rts_smooth(th, om, cov, qp, qf):
    """Backward pass for the constant-frequency model ``F = [[1, 1], [0, 1]]``."""
    th_s, om_s = th.copy(), om.copy()
    for k in range(th.size - 2, -1, -1):
        p11, p12, p22 = cov[k]
        a11, a12, a22 = p11 + 2 * p12 + p22 + qp, p12 + p22, p22 + qf
        det = a11 * a22 - a12 * a12
        if not det > 0:
            continue
        c11, c12, c21, c22 = p11 + p12, p12, p12 + p22, p22
        g11 = (c11 * a22 - c12 * a12) / det
        g12 = (c12 * a11 - c11 * a12) / det
        g21 = (c21 * a22 - c22 * a12) / det
        g22 = (c22 * a11 - c21 * a12) / det
        d1 = th_s[k + 1] - (th[k] + om[k])
        d2 = om_s[k + 1] - om[k]
        th_s[k] = th[k] + g11 * d1 + g12 * d2
        om_s[k] = om[k] + g21 * d1 + g22 * d2
    return th_s, om_s


def interpolate_phase(est_times, est_phases, sample_index) -> np.ndarray:
    """Linear interpolation of a phase track onto sample instants."""
    return np.interp(np.asarray(sample_index, dtype=float), est_times, est_phases)


def residual_phase_variance(estimate, truth) -> float:
    """Variance of (estimate - truth) after removing the common constant."""
    d = np.asarray(estimate, dtype=float) - np.asarray(truth, dtype=float)
    return float(np.var(d))


# -------------------------------------------------------- synchronization


@dataclass(frozen=True)
class SyncResult:
    offset: int
    psl: float
    peak_phase: float
    fraction: float = 0.0


def synchronize(
    received,
    reference,
    sps: int = 1,
    max_lag: int | None = None,
    min_psl: float = 3.0,
    start: int = 0,
) -> SyncResult:
    """Locate ``reference`` (at ``sps`` spacing) inside ``received``.

    Lags ``start .. start + max_lag`` are searched. The peak-to-sidelobe
    ratio compares the correlation peak with the largest value at the other
    lags of the same sampling phase (multiples of ``sps`` away).
    """
    received = np.asarray(received, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    if reference.size < 64:
        raise ValueError("need at least 64 reference symbols")
    span = (reference.size - 1) * sps + 1
    last = received.size - span
    if max_lag is not None:
        last = min(last, start + max_lag)
    if last < start:
        raise ValueError("received stream shorter than the reference")
    seg = received[start : last + span]
    ref_up = np.zeros(span, dtype=complex)
    ref_up[::sps] = reference
    corr = signal.correlate(seg, ref_up, mode="valid", method="auto")
    mag = np.abs(corr)
    peak = int(np.argmax(mag))
    # sidelobes on the same sampling phase; off-grid lags only trace the pulse
    grid = mag[peak % sps :: sps]
    others = np.delete(grid, peak // sps)
    side = others.max() if others.size else 0.0
    psl = float(mag[peak] / side) if side > 0 else math.inf
    if psl < min_psl:
        raise SyncError(f"peak-to-sidelobe ratio {psl:.2f} below {min_psl}")
    frac = 0.0
    if 0 < peak < mag.size - 1:
        a, b, c = mag[peak - 1], mag[peak], mag[peak + 1]
        den = a - 2 * b + c
        if den < 0:
            frac = float(0.5 * (a - c) / den)
    return SyncResult(start + peak, psl, float(np.angle(corr[peak])), frac)


def fractional_delay(x: np.ndarray, delay: float) -> np.ndarray:
    """Advance ``x`` by ``delay`` samples with a band-limited (FFT) shift."""
    if delay == 0:
        return x
    n = x.size
    m = sp_fft.next_fast_len(n)
    f = sp_fft.fftfreq(m)
    return sp_fft.ifft(sp_fft.fft(x, m) * np.exp(2j * np.pi * f * delay))[:n]


# --------------------------------------------------------- symbol recovery


@dataclass(frozen=True)
class RxConfig:
    """Receiver settings. Frequencies are detector-output beat notes."""

    quantum_beat_hz: float
    pilot_beat_hz: float
    pilot_bandwidth_hz: float = 2e6
    pilot_search_hz: float = 1e6
    pilot_guard_hz: float = 50e3
    min_pilot_snr: float = 1.0
    linewidth_hz: float = 200.0
    ukf: UkfConfig | None = None
    whitening_regularization: float = 1e-3
    whitening_nperseg: int = 4096
    whitening_smoothing: int | None = 12
    sync_max_lag: int = 2048
    min_psl: float = 3.0
    fractional_timing: bool = True

    @classmethod
    def for_link(cls, tx: TxConfig, lo_offset_hz: float, **kw) -> "RxConfig":
        return cls(
            quantum_beat_hz=tx.f_shift_hz - lo_offset_hz,
            pilot_beat_hz=tx.f_pilot_hz - lo_offset_hz,
            **kw,
        )


@dataclass(frozen=True)
class Calibration:
    """Per-frame receiver calibration: whitening and shot-noise scale."""

    whitening: WhiteningFilter
    var_vacuum: float
    var_electronic: float

    @property
    def snu_scale(self) -> float:
        return calibrate_snu(self.var_vacuum, self.var_electronic)

    @property
    def t_hat(self) -> float:
        return trusted_noise_from_traces(self.var_vacuum, self.var_electronic)


def _quantum_chain(y: np.ndarray, fs: float, f_mix: float, taps: np.ndarray, phase=None):
    k = np.arange(y.size)
    arg = 2 * np.pi * f_mix / fs * k
    if phase is not None:
        arg = arg + phase
    z = 2.0 * y * np.exp(-1j * arg)
    return signal.oaconvolve(z, taps, mode="full")


def calibrate_receiver(
    vacuum: SampledTrace,
    electronic: SampledTrace,
    tx: TxConfig,
    rx: RxConfig,
) -> Calibration:
    """Whitening from the vacuum trace, then SNU from both processed traces."""
    w = design_whitening(vacuum, rx.whitening_regularization, rx.whitening_nperseg, rx.whitening_smoothing)
    taps = rrc_taps(tx.rrc_rolloff, tx.rrc_span_symbols, tx.sps)
    variances = []
    for tr in (vacuum, electronic):
        y = apply_whitening(tr, w).samples
        mf = _quantum_chain(y, tr.sample_rate_hz, rx.quantum_beat_hz, taps)
        sym = mf[taps.size - 1 : y.size : tx.sps]
        variances.append(quadrature_variance(sym))
    return Calibration(w, variances[0], variances[1])


def model_calibration(det: DetectorParams, tx: TxConfig, rx: RxConfig, grid: int = 1 << 16) -> Calibration:
    """Expected-value calibration from the detector model (no trace noise).

    Used when the simulated modulated trace carries no shot noise, where an
    empirical vacuum trace would only add estimation error.
    """
    fs = tx.sample_rate_hz
    vac_psd = (1.0 + det.t) * det.response(np.linspace(0, fs / 2, 2049)) ** 2
    w = WhiteningFilter.from_psd(np.linspace(0, fs / 2, 2049), vac_psd, fs, rx.whitening_regularization)
    taps = rrc_taps(tx.rrc_rolloff, tx.rrc_span_symbols, tx.sps)
    mf2 = np.abs(np.fft.fft(taps, grid)) ** 2
    f = np.fft.fftfreq(grid, 1 / fs) + rx.quantum_beat_hz
    shape = det.response(f) ** 2 * w.gain_at(f) ** 2
    band = float(np.mean(mf2 * shape))
    return Calibration(w, 2.0 * (1.0 + det.t) * band, 2.0 * det.t * band)


def default_ukf(rx: RxConfig, pilot: PilotSignal, fs: float) -> UkfConfig:
    """UKF settings derived from the linewidth and the measured pilot noise.

    The coarse FFT search leaves at most half a bin of frequency error,
    which sets the initial frequency uncertainty. A small phase process
    noise floor keeps the filter adaptive when the linewidth is zero.
    """
    step = float(pilot.times[1] - pilot.times[0]) if pilot.times.size > 1 else 1.0
    n_trace = step * pilot.times.size
    qp = max(2 * np.pi * rx.linewidth_hz / fs * step, PHASE_NOISE_FLOOR)
    r = max(pilot.noise_var / 2, 1e-12 * pilot.amplitude**2, 1e-300)
    half_bin = np.pi / n_trace * step
    return UkfConfig(
        process_noise_phase=qp,
        measurement_noise=r,
        initial_covariance=((1.0, 0.0), (0.0, (2 * half_bin) ** 2)),
    )


PHASE_NOISE_FLOOR = 1e-10


@dataclass(frozen=True)
class RxResult:
    """Output of :func:`recover_symbols`.

    ``frame`` holds SNU-normalized symbols. ``symbol_times`` are the trace
    sample indices of every recovered symbol; ``phase_at_symbols`` is the
    applied carrier phase there (relative to ``mix_hz``).
    """

    frame: SymbolFrame
    sync: SyncResult
    symbol_times: np.ndarray
    phase_at_symbols: np.ndarray
    pilot: PilotSignal | None
    ukf: PhaseEstimate | None
    quantum_mix_hz: float


def recover_symbols(
    trace: SampledTrace,
    cal: Calibration,
    tx: TxConfig,
    rx: RxConfig,
    reference_symbols,
    n_symbols: int,
    frame_id: int = 0,
    phase_override=None,
    mix_override_hz: float | None = None,
    use_pilot: bool = True,
) -> RxResult:
    """Run the receiver chain on one modulated frame.

    ``phase_override`` (per trace sample, with ``mix_override_hz``) replaces
    the pilot/UKF phase, e.g. with the simulator's ground truth. With
    ``use_pilot=False`` and no override the nominal beat is used with a
    constant phase, which the synchronization step removes.
    """
    fs, sps = trace.sample_rate_hz, tx.sps
    reference_symbols = np.asarray(reference_symbols, dtype=complex)
    y = apply_whitening(trace, cal.whitening).samples
    k = np.arange(y.size)

    pilot = est = None
    if phase_override is None and not use_pilot:
        phase = np.zeros(y.size)
        mix = rx.quantum_beat_hz
    elif phase_override is None:
        qlo = rx.quantum_beat_hz - tx.quantum_halfwidth_hz
        qhi = rx.quantum_beat_hz + tx.quantum_halfwidth_hz
        pilot = extract_pilot(
            trace.replace(y), rx.pilot_beat_hz, rx.pilot_bandwidth_hz,
            rx.pilot_search_hz, rx.pilot_guard_hz, (qlo, qhi),
        )
        if pilot.snr < rx.min_pilot_snr:
            raise PilotError(f"pilot SNR {pilot.snr:.3g} below {rx.min_pilot_snr}")
        ukf_cfg = rx.ukf or default_ukf(rx, pilot, fs)
        est = ukf_track(pilot.trace, ukf_cfg, pilot.amplitude)
        est = PhaseEstimate(est.phases, est.freqs, pilot.times)
        phase = interpolate_phase(pilot.times, est.phases, k)
        mix = pilot.mix_hz - (tx.f_pilot_hz - tx.f_shift_hz)
    else:
        phase = np.asarray(phase_override, dtype=float)
        mix = rx.quantum_beat_hz if mix_override_hz is None else mix_override_hz

    taps = rrc_taps(tx.rrc_rolloff, tx.rrc_span_symbols, sps)
    mf = _quantum_chain(y, fs, mix, taps, phase)
    start = taps.size - 1
    n_ref = reference_symbols.size
    sync = synchronize(mf, reference_symbols, sps, rx.sync_max_lag, rx.min_psl, start=start)
    if rx.fractional_timing and sync.fraction:
        mf = fractional_delay(mf, sync.fraction)
    idx = sync.offset + sps * np.arange(n_symbols)
    if idx[-1] >= mf.size:
        raise SyncError("frame extends past the end of the trace")
    sym = mf[idx] * np.exp(-1j * sync.peak_phase) / math.sqrt(cal.snu_scale)
    times = idx - (taps.size - 1) // 2 + sync.fraction
    frame = SymbolFrame(sym[n_ref:], sym[:n_ref], tx.baud, frame_id)
    phase_sym = np.interp(times, k, phase)
    return RxResult(frame, sync, times, phase_sym, pilot, est, mix)
