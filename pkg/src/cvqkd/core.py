"""Shared containers, shot-noise-unit calibration and seeded randomness.

All variances are per quadrature and expressed in shot-noise units (SNU),
with the vacuum at 1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft


class CalibrationError(ValueError):
    """Raised when the vacuum trace carries no measurable shot noise."""


class TraceKind(enum.IntEnum):
    MODULATED = 0
    VACUUM = 1
    ELECTRONIC = 2


@dataclass(frozen=True)
class SampledTrace:
    """Uniformly sampled real or complex waveform.

    ``delay`` is the number of samples between the start of the trace and
    the centre of the first symbol pulse, when known (transmitter side).
    """

    sample_rate_hz: float
    samples: np.ndarray
    kind: TraceKind = TraceKind.MODULATED
    delay: int = 0

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        samples = np.asarray(self.samples)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "kind", TraceKind(self.kind))

    def __len__(self):
        return self.samples.size

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.samples)

    def replace(self, samples, **changes) -> "SampledTrace":
        kw = dict(sample_rate_hz=self.sample_rate_hz, kind=self.kind, delay=self.delay)
        kw.update(changes)
        return SampledTrace(samples=samples, **kw)


@dataclass(frozen=True)
class SymbolFrame:
    """Recovered (or transmitted) symbols of one frame.

    Reference symbols occupy a contiguous prefix of the frame and are
    disclosed; quantum symbols follow them.
    """

    quantum_symbols: np.ndarray
    reference_symbols: np.ndarray
    baud: float
    frame_id: int = 0

    def __post_init__(self):
        for name in ("quantum_symbols", "reference_symbols"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_symbols(self) -> int:
        return self.quantum_symbols.size + self.reference_symbols.size

    @property
    def all_symbols(self) -> np.ndarray:
        return np.concatenate([self.reference_symbols, self.quantum_symbols])

    @classmethod
    def from_symbols(cls, symbols, n_reference: int, baud: float, frame_id: int = 0):
        symbols = np.asarray(symbols, dtype=complex)
        if not 0 <= n_reference <= symbols.size:
            raise ValueError("n_reference out of range")
        return cls(symbols[n_reference:], symbols[:n_reference], baud, frame_id)


@dataclass(frozen=True)
class LinkParams:
    """Trusted and untrusted link parameters.

    ``u`` is the untrusted excess noise referred to the input of Bob's
    heterodyne detector, i.e. after the trusted efficiency ``tau``. It
    contributes ``u / 2`` to each measured quadrature, and corresponds to
    an excess noise ``u / (eta * tau)`` at the channel input.
    """

    v_mod: float = 1.8
    eta: float = 0.049
    tau: float = 0.68
    t: float = 0.058
    u: float = 0.0013
    beta: float = 0.9431
    fer: float = 0.5
    baud: float = 20e6

    def __post_init__(self):
        if self.v_mod < 0:
            raise ValueError("v_mod must be non-negative")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.t < 0 or self.u < 0:
            raise ValueError("t and u must be non-negative")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")
        if not 0 <= self.fer <= 1:
            raise ValueError("fer must lie in [0, 1]")
        if not self.baud > 0:
            raise ValueError("baud must be positive")

    def measured_variance(self, u: float | None = None) -> float:
        """Expected per-quadrature variance of Bob's SNU-normalized symbols."""
        u = self.u if u is None else u
        return 0.5 * self.tau * self.eta * self.v_mod + 1.0 + self.t + 0.5 * u


@dataclass(frozen=True)
class RngStream:
    """Named, counter-based random stream.

    Equal ``(seed, stream_id)`` pairs reproduce identical draws; different
    stream ids are independent Philox streams spawned from the same seed.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        object.__setattr__(self, "_gen", np.random.Generator(np.random.Philox(ss)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, scale=1.0, size=None):
        return self._gen.normal(0.0, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def complex_normal(self, variance_per_quadrature: float, size: int) -> np.ndarray:
        """Circular complex Gaussian with the given variance per quadrature."""
        std = np.sqrt(variance_per_quadrature)
        out = self._gen.normal(0.0, std, (size, 2))
        return out[:, 0] + 1j * out[:, 1]


# Stream purposes. A frame's stream id is frame_id * _N_PURPOSES + purpose.
PURPOSES = (
    "symbols",
    "phase",
    "excess",
    "shot",
    "electronic",
    "vacuum_shot",
    "vacuum_electronic",
    "electronic_trace",
    "disclosure",
    "reconciliation",
    "delay",
)
_N_PURPOSES = 16


def frame_stream(seed: int, frame_id: int, purpose: str) -> RngStream:
    """Return the stream used for ``purpose`` in frame ``frame_id``."""
    return RngStream(seed, frame_id * _N_PURPOSES + PURPOSES.index(purpose))


def gaussian_draw(rng: RngStream, n: int, variance: float) -> np.ndarray:
    """Draw ``n`` i.i.d. zero-mean normal samples of the given variance."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if variance < 0:
        raise ValueError("variance must be non-negative")
    return rng.normal(np.sqrt(variance), n)


def calibrate_snu(var_vacuum: float, var_electronic: float) -> float:
    """Shot-noise variance used to normalize quadratures to SNU.

    Both inputs are per-quadrature variances of DSP-processed vacuum and
    electronic-noise traces.
    """
    if not var_electronic >= 0:
        raise ValueError("var_electronic must be non-negative")
    if not var_vacuum > var_electronic:
        raise CalibrationError(
            f"vacuum variance {var_vacuum!r} does not exceed electronic "
            f"variance {var_electronic!r}: no measurable shot noise"
        )
    return var_vacuum - var_electronic


def trusted_noise_from_traces(var_vacuum: float, var_electronic: float) -> float:
    """Electronic noise in SNU at the measurement output."""
    return var_electronic / calibrate_snu(var_vacuum, var_electronic)


def quadrature_variance(symbols) -> float:
    """Mean of the I and Q sample variances (zero-mean assumption not used)."""
    symbols = np.asarray(symbols)
    return 0.5 * (np.var(symbols.real) + np.var(symbols.imag))


def apply_frequency_response(x, sample_rate_hz: float, response) -> np.ndarray:
    """Zero-phase filtering by a real, even frequency response.

    ``response(f_hz)`` gives the gain at (non-negative) frequencies. The
    input is zero-padded to an FFT-friendly length, so the filter acts as
    a linear rather than circular convolution near the trace ends.
    """
    x = np.asarray(x)
    n = x.size
    m = sp_fft.next_fast_len(n, real=not np.iscomplexobj(x))
    if np.iscomplexobj(x):
        spec = sp_fft.fft(x, m)
        spec *= response(np.abs(sp_fft.fftfreq(m, 1 / sample_rate_hz)))
        return sp_fft.ifft(spec)[:n]
    spec = sp_fft.rfft(x, m)
    spec *= response(sp_fft.rfftfreq(m, 1 / sample_rate_hz))
    return sp_fft.irfft(spec, m)[:n]
