"""End-to-end frame simulation: transmitter, channel, receiver DSP, estimation.

A :class:`RunConfig` groups every setting. ``link`` is the single source of
``eta``, ``tau``, ``t`` and ``u``; the channel and detector sections only
hold what the link parameters do not.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, DetectorParams, generate_trace_set
from .core import PURPOSES, LinkParams, frame_stream
from .estimation import PhysicalityError, estimate_channel, key_fraction
from .rxdsp import (
    FrameError,
    RxConfig,
    UkfConfig,
    calibrate_receiver,
    interpolate_phase,
    model_calibration,
    naive_phase,
    recover_symbols,
    residual_phase_variance,
)
from .txdsp import TxConfig, transmit_frame

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelSection:
    linewidth_tx_hz: float = 100.0
    linewidth_lo_hz: float = 100.0
    lo_offset_hz: float = -180e6
    delay_samples: int = 137


@dataclass(frozen=True)
class DetectorSection:
    bandwidth_3db_hz: float = 365e6
    filter_order: int = 2
    shot_noise: bool = True


@dataclass(frozen=True)
class RxSection:
    """Receiver options; beat frequencies follow from the tx/channel plan.

    ``linewidth_hz=None`` tells the UKF the simulated combined linewidth.
    ``calibration`` is ``"traces"`` (vacuum/electronic recordings) or
    ``"model"`` (expected detector response).
    """

    pilot_bandwidth_hz: float = 2e6
    pilot_search_hz: float = 1e6
    pilot_guard_hz: float = 50e3
    min_pilot_snr: float = 1.0
    linewidth_hz: float | None = None
    whitening_regularization: float = 1e-3
    whitening_nperseg: int = 4096
    whitening_smoothing: int | None = 12
    sync_max_lag: int = 2048
    min_psl: float = 3.0
    fractional_timing: bool = True
    calibration: str = "traces"

    def __post_init__(self):
        if self.calibration not in ("traces", "model"):
            raise ValueError("calibration must be 'traces' or 'model'")


@dataclass(frozen=True)
class ReconciliationSection:
    enabled: bool = False
    alist: str | None = None
    dimension: int = 8
    max_iters: int = 200


@dataclass(frozen=True)
class RunSection:
    """Frame counts and bookkeeping.

    ``symbols_per_frame`` includes the ``tx.n_reference`` reference symbols.
    ``disclosure_fraction`` of the remaining symbols is also disclosed for
    parameter estimation. ``truth_reference`` reprocesses each frame with
    the simulator's true phase to isolate the phase-noise contribution.
    """

    n_frames: int = 10
    symbols_per_frame: int = 200_000
    seed: int = 0
    output_dir: str = "out"
    disclosure_fraction: float = 0.5
    pilot: bool = True
    truth_reference: bool = False
    save_traces: bool = False
    drop_tolerance: float = 0.1

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if not 0 <= self.disclosure_fraction <= 1:
            raise ValueError("disclosure_fraction must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.drop_tolerance <= 1:
            raise ValueError("drop_tolerance must lie in [0, 1]")


@dataclass(frozen=True)
class RunConfig:
    link: LinkParams = field(default_factory=LinkParams)
    tx: TxConfig = field(default_factory=TxConfig)
    channel: ChannelSection = field(default_factory=ChannelSection)
    detector: DetectorSection = field(default_factory=DetectorSection)
    rx: RxSection = field(default_factory=RxSection)
    ukf: UkfConfig | None = None
    reconciliation: ReconciliationSection = field(default_factory=ReconciliationSection)
    run: RunSection = field(default_factory=RunSection)

    def __post_init__(self):
        if self.run.symbols_per_frame <= self.tx.n_reference:
            raise ValueError("symbols_per_frame must exceed tx.n_reference")
        if self.tx.baud != self.link.baud:
            raise ValueError("tx.baud and link.baud differ")

    def replace(self, **sections) -> "RunConfig":
        """Copy with whole sections or ``section__field`` entries replaced."""
        groups: dict[str, dict] = {}
        direct = {}
        for key, val in sections.items():
            if "__" in key:
                sec, name = key.split("__", 1)
                groups.setdefault(sec, {})[name] = val
            else:
                direct[key] = val
        for sec, changes in groups.items():
            direct[sec] = dataclasses.replace(direct.get(sec, getattr(self, sec)), **changes)
        return dataclasses.replace(self, **direct)

    def channel_params(self) -> ChannelParams:
        c = self.channel
        return ChannelParams(
            eta=self.link.eta, xi_out=self.link.u / self.link.tau,
            linewidth_tx_hz=c.linewidth_tx_hz, linewidth_lo_hz=c.linewidth_lo_hz,
            lo_offset_hz=c.lo_offset_hz, delay_samples=c.delay_samples,
        )

    def detector_params(self) -> DetectorParams:
        d = self.detector
        return DetectorParams(
            tau=self.link.tau, t=self.link.t, bandwidth_3db_hz=d.bandwidth_3db_hz,
            filter_order=d.filter_order, shot_noise=d.shot_noise,
        )

    def rx_config(self) -> RxConfig:
        kw = dataclasses.asdict(self.rx)
        kw.pop("calibration")
        if kw["linewidth_hz"] is None:
            kw["linewidth_hz"] = self.channel.linewidth_tx_hz + self.channel.linewidth_lo_hz
        return RxConfig.for_link(self.tx, self.channel.lo_offset_hz, ukf=self.ukf, **kw)

    def signal_bands(self) -> list[tuple[float, float]]:
        rx = self.rx_config()
        hw = self.tx.quantum_halfwidth_hz
        return [(rx.quantum_beat_hz - hw, rx.quantum_beat_hz + hw), (rx.pilot_beat_hz,) * 2]


def paper_config(**overrides) -> RunConfig:
    """Frequency plan and link parameters of the reference experiment."""
    return RunConfig().replace(**overrides)


def desk_config(sps: int = 10, **overrides) -> RunConfig:
    """Scaled-down frequency plan for fast runs at ``sps`` samples/symbol.

    Quantum band at 0.25 B and pilot at 3 B on the transmitter side, LO
    offset -B, detector bandwidth 4.5 B.
    """
    baud = LinkParams().baud
    cfg = RunConfig(
        tx=TxConfig.desk(sps, baud),
        channel=ChannelSection(lo_offset_hz=-baud),
        detector=DetectorSection(bandwidth_3db_hz=4.5 * baud),
    )
    return cfg.replace(**overrides)


# ------------------------------------------------------------- per frame


@dataclass(frozen=True)
class FrameMetrics:
    """One record per frame. ``dropped`` frames carry NaN estimates."""

    frame_id: int
    eta_hat: float = math.nan
    xi_I: float = math.nan
    xi_Q: float = math.nan
    v_est: float = math.nan
    v_est_naive: float = math.nan
    sync_offset: int = -1
    psl: float = math.nan
    pilot_snr: float = math.nan
    ukf_converged: bool = False
    decode_converged: float = math.nan
    key_fraction_contribution: float = math.nan
    xi_truth_I: float = math.nan
    xi_truth_Q: float = math.nan
    n_disclosed: int = 0
    dropped: bool = False
    error: str = ""


FIELDS = tuple(f.name for f in dataclasses.fields(FrameMetrics))


@dataclass
class FrameOutput:
    metrics: FrameMetrics
    alice: np.ndarray | None = None
    bob: np.ndarray | None = None
    traces: object = None


def _disclosed(cfg: RunConfig, tx_symbols: np.ndarray, rx_frame):
    n_ref = cfg.tx.n_reference
    nq = rx_frame.quantum_symbols.size
    k = int(round(cfg.run.disclosure_fraction * nq))
    a = np.concatenate([tx_symbols[:n_ref], tx_symbols[n_ref : n_ref + k]])
    b = np.concatenate([rx_frame.reference_symbols, rx_frame.quantum_symbols[:k]])
    secret = (tx_symbols[n_ref + k :], rx_frame.quantum_symbols[k:])
    return a, b, secret


def _frame_key(link: LinkParams, eta_hat: float, xi_i: float, xi_q: float) -> float:
    try:
        est = dataclasses.replace(link, eta=min(max(eta_hat, 1e-12), 1.0))
        return key_fraction(est, (max(xi_i, 0.0), max(xi_q, 0.0))).key_fraction
    except (ValueError, PhysicalityError):
        return math.nan


def process_frame(cfg: RunConfig, frame_id: int, keep_symbols: bool = False) -> FrameOutput:
    """Simulate and process one frame; receiver failures drop the frame."""
    streams = {p: frame_stream(cfg.run.seed, frame_id, p) for p in PURPOSES}
    tx_cfg, link = cfg.tx, cfg.link
    ch, det, rx = cfg.channel_params(), cfg.detector_params(), cfg.rx_config()
    n_sym = cfg.run.symbols_per_frame

    txf = transmit_frame(streams["symbols"], n_sym, tx_cfg, link.v_mod, pilot=cfg.run.pilot)
    traces = generate_trace_set(txf.trace, ch, det, streams, cfg.signal_bands())
    if cfg.rx.calibration == "model":
        cal = model_calibration(det, tx_cfg, rx)
    else:
        cal = calibrate_receiver(traces.vacuum, traces.electronic, tx_cfg, rx)
    refs = txf.symbols[: tx_cfg.n_reference]
    shot = 1.0 if det.shot_noise else 0.0
    keep = traces if cfg.run.save_traces else None
    try:
        res = recover_symbols(
            traces.modulated, cal, tx_cfg, rx, refs, n_sym, frame_id, use_pilot=cfg.run.pilot
        )
    except FrameError as exc:
        log.info("frame %d dropped: %s", frame_id, exc)
        return FrameOutput(FrameMetrics(frame_id, dropped=True, error=type(exc).__name__), traces=keep)

    fs = tx_cfg.sample_rate_hz
    k_all = np.arange(len(traces.modulated))
    v_est = v_naive = math.nan
    xi_truth = (math.nan, math.nan)
    pilot_snr = math.nan
    if res.pilot is not None:
        pilot_snr = res.pilot.snr
        f_true = tx_cfg.f_pilot_hz - ch.lo_offset_hz
        truth = 2 * np.pi * (f_true - res.pilot.mix_hz) / fs * k_all + traces.phase.phases
        sym_t = res.symbol_times[tx_cfg.n_reference :]
        truth_sym = np.interp(sym_t, k_all, truth)
        v_est = residual_phase_variance(res.phase_at_symbols[tx_cfg.n_reference :], truth_sym)
        naive = interpolate_phase(res.pilot.times, naive_phase(res.pilot.trace), sym_t)
        v_naive = residual_phase_variance(naive, truth_sym)
        if cfg.run.truth_reference:
            try:
                ref_res = recover_symbols(
                    traces.modulated, cal, tx_cfg, rx, refs, n_sym, frame_id,
                    phase_override=truth, mix_override_hz=res.quantum_mix_hz,
                )
                a_t, b_t, _ = _disclosed(cfg, txf.symbols, ref_res.frame)
                nb_t = estimate_channel(a_t, b_t, link, shot_noise=shot)
                xi_truth = (nb_t.xi_I, nb_t.xi_Q)
            except FrameError:
                pass

    a, b, secret = _disclosed(cfg, txf.symbols, res.frame)
    nb = estimate_channel(a, b, link, v_est, frame_id, shot_noise=shot)

    decode = math.nan
    if cfg.reconciliation.enabled:
        from .io import load_alist
        from .reconciliation import run_reconciliation

        h = load_alist(cfg.reconciliation.alist)
        rr = run_reconciliation(
            secret[0], secret[1], h, cfg.reconciliation.dimension,
            streams["reconciliation"], cfg.reconciliation.max_iters,
        )
        decode = 1.0 - rr.fer if rr.n_blocks else math.nan

    m = FrameMetrics(
        frame_id=frame_id,
        eta_hat=nb.eta_hat,
        xi_I=nb.xi_I,
        xi_Q=nb.xi_Q,
        v_est=v_est,
        v_est_naive=v_naive,
        sync_offset=int(res.sync.offset),
        psl=res.sync.psl,
        pilot_snr=pilot_snr,
        ukf_converged=res.ukf is not None or res.pilot is None,
        decode_converged=decode,
        key_fraction_contribution=_frame_key(link, nb.eta_hat, nb.xi_I, nb.xi_Q),
        xi_truth_I=xi_truth[0],
        xi_truth_Q=xi_truth[1],
        n_disclosed=nb.n,
    )
    if keep_symbols:
        return FrameOutput(m, txf.symbols, res.frame.all_symbols, keep)
    return FrameOutput(m, traces=keep)


def _worker(args):
    cfg, fid, keep = args
    return process_frame(cfg, fid, keep)


def run_frames(cfg: RunConfig, jobs: int = 1, keep_symbols: bool = False) -> list[FrameOutput]:
    """Process all frames; results come back in frame order for any ``jobs``."""
    tasks = [(cfg, fid, keep_symbols) for fid in range(cfg.run.n_frames)]
    if jobs <= 1:
        return [_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_worker, tasks))


@dataclass(frozen=True)
class RunSummary:
    n_frames: int
    n_dropped: int
    eta_hat: float
    xi_I: float
    xi_Q: float
    v_est: float
    key_fraction: float
    key_rate_bps: float
    i_ab: float
    holevo: float


def summarize(cfg: RunConfig, metrics: list[FrameMetrics]) -> RunSummary:
    """Frame-averaged estimates and the key rate they imply."""
    ok = [m for m in metrics if not m.dropped]
    n_drop = len(metrics) - len(ok)

    def mean(name):
        vals = [getattr(m, name) for m in ok]
        vals = [v for v in vals if not math.isnan(v)]
        return float(np.mean(vals)) if vals else math.nan

    eta, xi_i, xi_q = mean("eta_hat"), mean("xi_I"), mean("xi_Q")
    kr = i_ab = chi = math.nan
    kf = math.nan
    if ok:
        try:
            est = dataclasses.replace(cfg.link, eta=min(max(eta, 1e-12), 1.0))
            r = key_fraction(est, (max(xi_i, 0.0), max(xi_q, 0.0)))
            kf, kr, i_ab, chi = r.key_fraction, r.key_rate_bps, r.i_ab, r.holevo
        except (ValueError, PhysicalityError):
            pass
    return RunSummary(len(metrics), n_drop, eta, xi_i, xi_q, mean("v_est"), kf, kr, i_ab, chi)
