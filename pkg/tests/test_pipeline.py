import math

import numpy as np
import pytest

from cvqkd.estimation import excess_noise_se
from cvqkd.io import metrics_csv
from cvqkd.pipeline import (
    FIELDS,
    FrameMetrics,
    RunConfig,
    desk_config,
    paper_config,
    process_frame,
    run_frames,
    summarize,
)


def _small(**kw):
    base = dict(run__symbols_per_frame=20_000)
    base.update(kw)
    return desk_config(**base)


def test_config_replace_and_validation():
    cfg = paper_config(link__eta=0.1, run__n_frames=3)
    assert cfg.link.eta == 0.1 and cfg.run.n_frames == 3
    assert cfg.channel_params().eta == 0.1
    assert cfg.detector_params().tau == cfg.link.tau
    assert cfg.rx_config().linewidth_hz == 200.0
    rx = cfg.rx_config()
    assert (rx.quantum_beat_hz, rx.pilot_beat_hz) == (260e6, 330e6)
    d = desk_config()
    assert (d.rx_config().quantum_beat_hz, d.rx_config().pilot_beat_hz) == (25e6, 80e6)
    with pytest.raises(ValueError):
        paper_config(run__symbols_per_frame=10)
    with pytest.raises(ValueError):
        paper_config(tx__baud=10e6)
    with pytest.raises(ValueError):
        paper_config(rx__calibration="guess")
    with pytest.raises(ValueError):
        paper_config(run__n_frames=0)


def test_frame_estimates_are_sane():
    out = process_frame(_small(), 0, keep_symbols=True)
    m = out.metrics
    assert not m.dropped
    assert m.eta_hat == pytest.approx(0.049, rel=0.2)
    se = excess_noise_se(1.08, m.n_disclosed)
    assert abs(m.xi_I - 0.0013) < 5 * se and abs(m.xi_Q - 0.0013) < 5 * se
    assert m.v_est < m.v_est_naive
    assert m.psl > 3 and m.pilot_snr > 1 and m.ukf_converged
    assert m.sync_offset >= 0
    assert out.alice.shape == out.bob.shape == (20_000,)
    assert m.n_disclosed == 15_000
    assert math.isnan(m.decode_converged)


def test_energy_bookkeeping():
    cfg = _small(run__symbols_per_frame=60_000, channel__linewidth_tx_hz=0.0, channel__linewidth_lo_hz=0.0)
    out = process_frame(cfg, 0, keep_symbols=True)
    key = out.bob[cfg.tx.n_reference :]
    want = cfg.link.measured_variance()
    se = want * np.sqrt(2 / key.size)
    assert abs(np.var(key.real) - want) < 5 * se
    assert abs(np.var(key.imag) - want) < 5 * se


def test_vacuum_through_receiver_is_one_snu():
    from cvqkd.channel import heterodyne_detect
    from cvqkd.core import RngStream, TraceKind, quadrature_variance
    from cvqkd.rxdsp import _quantum_chain, apply_whitening, calibrate_receiver
    from cvqkd.txdsp import rrc_taps

    # the SNU scale removes only shot noise, so a vacuum trace reads 1 + t

    cfg = desk_config()
    det, tx, rx = cfg.detector_params(), cfg.tx, cfg.rx_config()
    fs, n = tx.sample_rate_hz, 400_000
    vac = heterodyne_detect(None, det, RngStream(1), RngStream(2), n=n, sample_rate_hz=fs, kind=TraceKind.VACUUM)
    el = heterodyne_detect(None, det, RngStream(3), RngStream(3), n=n, sample_rate_hz=fs, shot_noise=False)
    cal = calibrate_receiver(vac, el, tx, rx)
    other = heterodyne_detect(None, det, RngStream(4), RngStream(5), n=n, sample_rate_hz=fs)

    taps = rrc_taps(tx.rrc_rolloff, tx.rrc_span_symbols, tx.sps)
    y = apply_whitening(other, cal.whitening).samples
    sym = _quantum_chain(y, fs, rx.quantum_beat_hz, taps)[taps.size - 1 : n : tx.sps] / np.sqrt(cal.snu_scale)
    m = sym.size
    assert quadrature_variance(sym) == pytest.approx(1.0 + cfg.link.t, abs=5 * np.sqrt(2 / m) * 1.06)
    assert cal.t_hat == pytest.approx(cfg.link.t, rel=0.1)


def test_frames_are_reproducible_and_distinct():
    cfg = _small()
    a = process_frame(cfg, 1).metrics
    b = process_frame(cfg, 1).metrics
    c = process_frame(cfg, 2).metrics
    assert metrics_csv([a]) == metrics_csv([b])
    assert a.xi_I != c.xi_I


def test_truth_reference_isolates_phase_noise():
    cfg = _small(run__truth_reference=True, run__disclosure_fraction=1.0)
    m = process_frame(cfg, 0).metrics
    assert np.isfinite(m.xi_truth_I) and np.isfinite(m.xi_truth_Q)
    # the two estimates share all noise except the phase error
    assert abs(m.xi_I - m.xi_truth_I) < 0.01


def test_no_pilot_still_runs_without_phase_noise():
    cfg = _small(run__pilot=False, channel__linewidth_tx_hz=0.0, channel__linewidth_lo_hz=0.0)
    m = process_frame(cfg, 0).metrics
    assert not m.dropped
    assert math.isnan(m.v_est)
    assert m.eta_hat == pytest.approx(0.049, rel=0.2)


def test_failed_sync_drops_frame():
    cfg = _small(rx__min_psl=1e9)
    m = process_frame(cfg, 0).metrics
    assert m.dropped and m.error == "SyncError"
    assert math.isnan(m.eta_hat)


def test_reconciliation_in_pipeline():
    cfg = _small(reconciliation__enabled=True, link__eta=0.9, link__tau=0.9, link__t=0.01)
    m = process_frame(cfg, 0).metrics
    assert 0 <= m.decode_converged <= 1


def test_run_frames_order_and_summary():
    cfg = _small(run__n_frames=3)
    outs = run_frames(cfg, jobs=2)
    assert [o.metrics.frame_id for o in outs] == [0, 1, 2]
    serial = run_frames(cfg, jobs=1)
    assert metrics_csv([o.metrics for o in outs]) == metrics_csv([o.metrics for o in serial])
    s = summarize(cfg, [o.metrics for o in outs] + [FrameMetrics(3, dropped=True)])
    assert s.n_frames == 4 and s.n_dropped == 1
    assert s.eta_hat == pytest.approx(np.mean([o.metrics.eta_hat for o in outs]))
    assert s.key_rate_bps == pytest.approx(s.key_fraction * cfg.link.baud)


def test_metrics_fields():
    assert FIELDS[0] == "frame_id"
    assert {"eta_hat", "xi_I", "xi_Q", "v_est", "sync_offset", "psl", "pilot_snr", "ukf_converged",
            "decode_converged", "key_fraction_contribution"} <= set(FIELDS)
    assert isinstance(RunConfig(), RunConfig)
