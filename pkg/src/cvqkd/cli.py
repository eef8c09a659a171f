"""Command-line entry point: ``cvqkd {run, keyrate, traces, reconcile}``.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 more dropped frames than ``run.drop_tolerance`` allows.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io as cio
from .core import LinkParams
from .estimation import key_fraction
from .pipeline import RunConfig, desk_config, paper_config, process_frame, run_frames, summarize

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PIPELINE = 0, 2, 3, 4

log = logging.getLogger("cvqkd")


class UsageError(Exception):
    pass


def _setup_logging():
    level = os.environ.get("CVQKD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--preset", choices=("paper", "desk"), default="paper",
                   help="base configuration the JSON file is applied to")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--frames", type=int, help="override run.n_frames")
    p.add_argument("--out", help="output directory (overrides run.output_dir)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=JSON",
                   help="override one config entry, e.g. --set link.eta=0.1")


def _build_config(args) -> RunConfig:
    base = desk_config() if args.preset == "desk" else paper_config()
    cfg = cio.load_config(args.config, base) if args.config else base
    data: dict = {}
    for item in args.set:
        key, sep, raw = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot:
            raise UsageError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        data.setdefault(section, {})[name] = value
    run = {}
    if args.seed is not None:
        run["seed"] = args.seed
    if args.frames is not None:
        if args.frames < 1:
            raise UsageError("--frames must be >= 1")
        run["n_frames"] = args.frames
    if args.out is not None:
        run["output_dir"] = args.out
    if run:
        data.setdefault("run", {}).update(run)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return cio.config_from_dict(data, cfg) if data else cfg


# ---------------------------------------------------------------- commands


def cmd_run(args) -> int:
    cfg = _build_config(args)
    out = Path(cfg.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    keep = args.save_symbols
    results = run_frames(cfg, args.jobs, keep_symbols=keep)
    metrics = [r.metrics for r in results]
    cio.write_metrics(out / "metrics.csv", metrics)
    summary = summarize(cfg, metrics)
    cio.write_summary(out / "summary.json", summary, cfg)
    (out / "config.json").write_text(cio.dump_config(cfg))
    if cfg.run.save_traces:
        for r in results:
            if r.traces is None:
                continue
            fid = r.metrics.frame_id
            for kind in ("modulated", "vacuum", "electronic"):
                cio.write_trace(out / f"frame{fid:05d}_{kind}.cvqt", getattr(r.traces, kind))
    if keep:
        ok = [r for r in results if r.alice is not None]
        n_ref = cfg.tx.n_reference
        alice = np.concatenate([r.alice[n_ref:] for r in ok]) if ok else np.empty(0, complex)
        bob = np.concatenate([r.bob[n_ref:] for r in ok]) if ok else np.empty(0, complex)
        cio.write_symbols(out / "symbols.npz", alice, bob)
    print(json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v)
                      for k, v in dataclasses.asdict(summary).items()}, indent=2))
    if summary.n_dropped > cfg.run.drop_tolerance * summary.n_frames:
        log.error("%d of %d frames dropped", summary.n_dropped, summary.n_frames)
        return EXIT_PIPELINE
    return EXIT_OK


_LINK_FLAGS = ("v_mod", "eta", "tau", "t", "u", "beta", "fer", "baud")


def cmd_keyrate(args) -> int:
    link = _build_config(args).link if args.config or args.set else LinkParams()
    changes = {k: getattr(args, k) for k in _LINK_FLAGS if getattr(args, k) is not None}
    try:
        link = dataclasses.replace(link, **changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.sweep_eta:
        lo, hi, num = args.sweep_eta
        lines = ["eta,key_fraction"]
        for eta in np.linspace(float(lo), float(hi), int(num)):
            r = key_fraction(dataclasses.replace(link, eta=float(eta)))
            lines.append(f"{eta!r},{r.key_fraction!r}")
        text = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    r = key_fraction(link)
    print(json.dumps({"inputs": dataclasses.asdict(link), "result": dataclasses.asdict(r)}, indent=2))
    return EXIT_OK


def cmd_traces(args) -> int:
    if args.action == "inspect":
        if not args.files:
            raise UsageError("traces inspect needs at least one file")
        for f in args.files:
            tr = cio.read_trace(f)
            x = tr.samples
            print(json.dumps({
                "file": f, "kind": tr.kind.name.lower(), "complex": tr.is_complex,
                "sample_rate_hz": tr.sample_rate_hz, "count": len(tr),
                "mean": float(np.mean(x.real)), "variance": float(np.var(x)),
            }))
        return EXIT_OK
    cfg = _build_config(args)
    out = Path(cfg.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = cfg.replace(run__save_traces=True)
    for fid in range(cfg.run.n_frames):
        res = process_frame(cfg, fid)
        for kind in ("modulated", "vacuum", "electronic"):
            path = out / f"frame{fid:05d}_{kind}.cvqt"
            cio.write_trace(path, getattr(res.traces, kind))
            print(path)
    return EXIT_OK


def cmd_reconcile(args) -> int:
    from .core import RngStream
    from .reconciliation import run_reconciliation

    if args.alist is not None and not Path(args.alist).is_file():
        raise UsageError(f"alist file not found: {args.alist}")
    h = cio.load_alist(args.alist)
    alice, bob = cio.read_symbols(args.symbols)
    seed = args.seed if args.seed is not None else 0
    res = run_reconciliation(alice, bob, h, args.dim, RngStream(seed, 0), args.max_iters)
    print(json.dumps({
        "n_blocks": res.n_blocks, "fer": res.fer, "beta": res.beta, "snr": res.snr,
        "net_bits": res.net_bits, "code_rate": h.rate, "n": h.n,
    }, indent=2))
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvqkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate and process frames")
    _common(p)
    p.add_argument("--save-symbols", action="store_true", help="write symbols.npz of key symbols")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("keyrate", help="asymptotic key fraction")
    _common(p)
    for k in _LINK_FLAGS:
        p.add_argument(f"--{k.replace('_', '-')}", dest=k, type=float)
    p.add_argument("--sweep-eta", nargs=3, metavar=("START", "STOP", "NUM"),
                   help="emit CSV of key fraction over an eta grid")
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("traces", help="generate or inspect trace files")
    _common(p)
    p.add_argument("action", choices=("generate", "inspect"))
    p.add_argument("files", nargs="*")
    p.set_defaults(func=cmd_traces)

    p = sub.add_parser("reconcile", help="reconcile a stored symbol file")
    _common(p)
    p.add_argument("symbols", help="NPZ file with 'alice' and 'bob' arrays")
    p.add_argument("--alist", help="parity-check matrix (default: bundled test code)")
    p.add_argument("--dim", type=int, default=8, choices=(1, 2, 4, 8))
    p.add_argument("--max-iters", type=int, default=200)
    p.set_defaults(func=cmd_reconcile)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, cio.ConfigError) as exc:
        print(f"cvqkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        kind = EXIT_IO if isinstance(exc, OSError) else EXIT_USAGE
        print(f"cvqkd: error: {exc}", file=sys.stderr)
        return kind


if __name__ == "__main__":
    sys.exit(main())
