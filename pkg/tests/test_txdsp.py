import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import signal

from cvqkd.core import RngStream, SampledTrace
from cvqkd.txdsp import (
    TxConfig,
    add_pilot,
    dac_quantize,
    draw_gmcs_symbols,
    frequency_shift,
    pilot_absolute_amplitude,
    pulse_shape,
    rrc_taps,
    transmit_frame,
)
from oracles import raised_cosine


def test_gmcs_statistics():
    assert draw_gmcs_symbols(RngStream(0), 0, 1.8).size == 0
    s = draw_gmcs_symbols(RngStream(0), 1_000_000, 1.8)
    bound = 3 * 1.8 * np.sqrt(2 / 1e6)
    assert abs(np.var(s.real) - 1.8) < bound
    assert abs(np.var(s.imag) - 1.8) < bound
    assert abs(np.mean(s.real * s.imag)) < 3 * 1.8 / np.sqrt(1e6)
    with pytest.raises(ValueError):
        draw_gmcs_symbols(RngStream(0), 10, 0.0)


@given(st.floats(0.05, 1.0), st.integers(4, 40), st.integers(2, 16))
def test_rrc_unit_energy_symmetric(rolloff, span, sps):
    taps = rrc_taps(rolloff, span, sps)
    assert np.sum(taps**2) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(taps, taps[::-1], atol=1e-15)
    assert np.all(np.isfinite(taps))


def test_rrc_singular_points_are_continuous():
    # rolloff 0.25 with sps 4 puts a tap exactly on t = 1/(4 rolloff)
    b = 0.25
    taps = rrc_taps(b, 8, 4)
    c = taps.size // 2
    h0 = 1 - b + 4 * b / np.pi
    h1 = b / np.sqrt(2) * ((1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b)))
    assert taps[c + 4] / taps[c] == pytest.approx(h1 / h0, rel=1e-9)
    assert taps[c - 4] == taps[c + 4]


def test_rrc_nyquist_against_raised_cosine():
    sps, span, beta = 16, 32, 0.2
    taps = rrc_taps(beta, span, sps)
    rc = np.convolve(taps, taps)
    c = rc.size // 2
    sampled = rc[c % sps :: sps]
    centre = c // sps
    assert sampled[centre] == pytest.approx(1.0, abs=1e-3)
    assert np.max(np.abs(np.delete(sampled, centre))) < 1e-3
    # full-resolution shape follows the analytic raised cosine near the centre
    ks = np.arange(-3 * sps, 3 * sps + 1)
    ref = np.array([raised_cosine(k / sps, beta) for k in ks])
    assert np.max(np.abs(rc[c + ks] - ref)) < 5e-3


def test_pulse_shape_impulse_and_loopback():
    cfg = TxConfig.desk(10, rrc_span_symbols=128)
    taps = rrc_taps(cfg.rrc_rolloff, cfg.rrc_span_symbols, cfg.sps)
    tr = pulse_shape(np.array([1.0 + 0j]), cfg)
    assert np.allclose(tr.samples[: taps.size], taps)
    assert np.allclose(tr.samples[taps.size :], 0)
    s = draw_gmcs_symbols(RngStream(1), 5000, 1.8)
    tr = pulse_shape(s, cfg)
    assert len(tr) == s.size * cfg.sps + taps.size - 1
    mf = signal.oaconvolve(tr.samples, taps)
    rec = mf[taps.size - 1 :: cfg.sps][: s.size]
    assert np.sqrt(np.mean(np.abs(rec - s) ** 2)) < 1e-3
    energy = np.sum(np.abs(tr.samples) ** 2)
    assert energy == pytest.approx(np.sum(np.abs(s) ** 2), rel=5e-3)


def test_frequency_shift():
    fs = 1e9
    tr = SampledTrace(fs, np.exp(2j * np.pi * 50e6 / fs * np.arange(4096)))
    assert frequency_shift(tr, 0.0) is tr
    back = frequency_shift(frequency_shift(tr, 80e6), -80e6)
    assert np.sqrt(np.mean(np.abs(back.samples - tr.samples) ** 2)) < 1e-12
    shifted = frequency_shift(tr, 80e6)
    f = np.fft.fftfreq(4096, 1 / fs)
    assert f[np.argmax(np.abs(np.fft.fft(shifted.samples)))] == pytest.approx(130e6, abs=fs / 4096)
    assert np.sum(np.abs(shifted.samples) ** 2) == pytest.approx(4096)
    with pytest.raises(ValueError):
        frequency_shift(tr, 490e6, bandwidth_hz=24e6)


def test_add_pilot_and_band_separation():
    cfg = TxConfig()
    s = draw_gmcs_symbols(RngStream(2), 20000, 1.8)
    base = frequency_shift(pulse_shape(s, cfg), cfg.f_shift_hz)
    assert add_pilot(base, cfg.f_pilot_hz, 0.0) is base
    with pytest.raises(ValueError):
        add_pilot(base, 85e6, 1.0, cfg.f_shift_hz, cfg.quantum_halfwidth_hz)
    amp = pilot_absolute_amplitude(cfg, 1.8)
    tr = add_pilot(base, cfg.f_pilot_hz, amp, cfg.f_shift_hz, cfg.quantum_halfwidth_hz)
    f, p = signal.welch(tr.samples, fs=cfg.sample_rate_hz, nperseg=8192, return_onesided=False)
    assert f[np.argmax(p)] == pytest.approx(150e6, abs=2 * cfg.sample_rate_hz / 8192)
    # pilot to quantum power ratio: amp^2 against 2 V_mod / sps per sample
    n = len(base)
    quantum_power = np.sum(np.abs(base.samples) ** 2) / n
    assert amp**2 / quantum_power == pytest.approx(cfg.pilot_amplitude**2, rel=0.03)
    # quantum band untouched: difference is exactly the tone
    tone = tr.samples - base.samples
    assert np.allclose(np.abs(tone), amp)


def test_quantum_band_psd_rolloff():
    cfg = TxConfig()
    s = draw_gmcs_symbols(RngStream(3), 40000, 1.8)
    tr = frequency_shift(pulse_shape(s, cfg), cfg.f_shift_hz)
    f, p = signal.welch(tr.samples, fs=cfg.sample_rate_hz, nperseg=4096, return_onesided=False)
    inband = np.abs(f - cfg.f_shift_hz) < 0.3 * cfg.baud
    outband = np.abs(f - cfg.f_shift_hz) > cfg.quantum_halfwidth_hz + 2e6
    assert 10 * np.log10(np.median(p[inband]) / np.max(p[outband])) > 40


def test_dac_quantize():
    n = 1 << 16
    x = np.sin(2 * np.pi * 0.01234567 * np.arange(n))
    tr = SampledTrace(1.0, x)
    q = dac_quantize(tr, 16)
    err = q.samples - x
    sqnr = 10 * np.log10(np.mean(x**2) / np.mean(err**2))
    assert sqnr == pytest.approx(6.02 * 16 + 1.76, abs=1.0)
    step = 2 / (2**16 - 1)
    assert np.max(np.abs(err)) <= step / 2 + 1e-15
    full = float(np.max(np.abs(x)))
    assert np.array_equal(dac_quantize(q, 16, full_scale=full).samples, q.samples)
    z = SampledTrace(1.0, np.zeros(8))
    assert np.array_equal(dac_quantize(z, 8).samples, z.samples)


def test_config_validation():
    with pytest.raises(ValueError):
        TxConfig(sample_rate_hz=1.05e9)
    with pytest.raises(ValueError):
        TxConfig(f_pilot_hz=80e6)
    with pytest.raises(ValueError):
        TxConfig(f_shift_hz=495e6)
    assert TxConfig().sps == 50


def test_reference_symbols_share_the_distribution():
    from scipy import stats

    cfg = TxConfig.desk(10, n_reference=20_000)
    f = transmit_frame(RngStream(4, 0), 40_000, cfg, 1.8)
    ref, key = f.symbols[:20_000], f.symbols[20_000:]
    assert stats.ks_2samp(ref.real, key.real).pvalue > 1e-3
    assert stats.ks_2samp(ref.imag, key.imag).pvalue > 1e-3


def test_transmit_deterministic():
    cfg = TxConfig.desk(10, n_reference=100)
    a = transmit_frame(RngStream(9, 0), 500, cfg, 1.8)
    b = transmit_frame(RngStream(9, 0), 500, cfg, 1.8)
    assert np.array_equal(a.trace.samples, b.trace.samples)
