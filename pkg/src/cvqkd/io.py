"""File formats: binary traces, JSON run configs, metrics CSV and summary JSON.

Trace file layout (little-endian)::

    b"CVQT"  u16 version  u8 kind  u8 is_complex  f64 sample_rate  u64 count
    count samples as f32 (re, im interleaved when complex)
"""
from __future__ import annotations

import csv
import dataclasses
import functools
import io
import json
import math
import struct
import typing
from pathlib import Path

import numpy as np

from .core import LinkParams, SampledTrace, TraceKind
from .pipeline import (
    FIELDS,
    ChannelSection,
    DetectorSection,
    FrameMetrics,
    ReconciliationSection,
    RunConfig,
    RunSection,
    RunSummary,
    RxSection,
)
from .reconciliation import ParityCheckMatrix, load_shipped_code
from .rxdsp import UkfConfig
from .txdsp import TxConfig

MAGIC = b"CVQT"
VERSION = 1
_HEADER = struct.Struct("<4sHBBdQ")


class ConfigError(ValueError):
    """Invalid or unknown configuration entries."""


# ------------------------------------------------------------------ traces


def write_trace(path, trace: SampledTrace) -> None:
    x = np.asarray(trace.samples)
    cplx = np.iscomplexobj(x)
    if cplx:
        data = np.empty(2 * x.size, dtype="<f4")
        data[0::2], data[1::2] = x.real, x.imag
    else:
        data = x.astype("<f4")
    header = _HEADER.pack(MAGIC, VERSION, int(trace.kind), int(cplx), float(trace.sample_rate_hz), x.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_trace(path) -> SampledTrace:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for a trace header")
    magic, version, kind, cplx, rate, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not a trace file (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported trace version {version}")
    if cplx not in (0, 1):
        raise ValueError("invalid complex flag")
    n_val = count * (2 if cplx else 1)
    body = raw[_HEADER.size :]
    if len(body) != 4 * n_val:
        raise ValueError(f"expected {n_val} samples, file holds {len(body) // 4}")
    data = np.frombuffer(body, dtype="<f4")
    samples = data[0::2] + 1j * data[1::2] if cplx else data.copy()
    return SampledTrace(rate, samples, TraceKind(kind))


# ------------------------------------------------------------------ config

_SECTIONS = {
    "link": LinkParams,
    "tx": TxConfig,
    "channel": ChannelSection,
    "detector": DetectorSection,
    "rx": RxSection,
    "ukf": UkfConfig,
    "reconciliation": ReconciliationSection,
    "run": RunSection,
}


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for name in _SECTIONS:
        sec = getattr(cfg, name)
        out[name] = None if sec is None else {
            f.name: _plain(getattr(sec, f.name)) for f in dataclasses.fields(sec)
        }
    return out


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _coerce(cls, name, value):
    hint = typing.get_type_hints(cls)[name]
    if value is None:
        return None
    if hint is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if hint is int and isinstance(value, float) and value.is_integer():
        return int(value)
    return _tupled(value)


def config_from_dict(data: dict, base: RunConfig | None = None) -> RunConfig:
    """Build a config from nested sections; unknown keys raise ConfigError."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    base = base or RunConfig()
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    sections = {}
    for name, cls in _SECTIONS.items():
        if name not in data:
            continue
        entries = data[name]
        if entries is None:
            if name != "ukf":
                raise ConfigError(f"section {name!r} cannot be null")
            sections[name] = None
            continue
        if not isinstance(entries, dict):
            raise ConfigError(f"section {name!r} must be an object")
        names = {f.name for f in dataclasses.fields(cls)}
        bad = set(entries) - names
        if bad:
            raise ConfigError(f"unknown key(s) in {name!r}: {sorted(bad)}")
        kw = {k: _coerce(cls, k, v) for k, v in entries.items()}
        current = getattr(base, name)
        try:
            sections[name] = cls(**kw) if current is None else dataclasses.replace(current, **kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"section {name!r}: {exc}") from None
    try:
        return dataclasses.replace(base, **sections)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=False) + "\n"


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data, base)


# ----------------------------------------------------------------- metrics


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def metrics_csv(metrics: list[FrameMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for m in metrics:
        w.writerow([_fmt(getattr(m, f)) for f in FIELDS])
    return buf.getvalue()


def write_metrics(path, metrics: list[FrameMetrics]) -> None:
    Path(path).write_text(metrics_csv(metrics))


def read_metrics(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_summary(path, summary: RunSummary, cfg: RunConfig | None = None) -> None:
    data = {k: (None if isinstance(v, float) and math.isnan(v) else v)
            for k, v in dataclasses.asdict(summary).items()}
    if cfg is not None:
        data["config"] = config_to_dict(cfg)
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


# ----------------------------------------------------------- LDPC / symbols


@functools.lru_cache(maxsize=8)
def load_alist(path: str | None) -> ParityCheckMatrix:
    """Parity-check matrix from an alist file; ``None`` gives the bundled code."""
    if path is None:
        return load_shipped_code()
    if not Path(path).is_file():
        raise FileNotFoundError(path)
    return ParityCheckMatrix.from_alist(str(path))


def write_symbols(path, alice, bob) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, alice=np.asarray(alice, dtype=complex), bob=np.asarray(bob, dtype=complex))


def read_symbols(path) -> tuple[np.ndarray, np.ndarray]:
    with np.load(path) as f:
        if "alice" not in f or "bob" not in f:
            raise ValueError("symbol file needs 'alice' and 'bob' arrays")
        return f["alice"], f["bob"]
