"""Reverse reconciliation over the multidimensional virtual channel."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import RngStream
from .ldpc import ParityCheckMatrix, ldpc_decode
from .multidim import bits_to_u, complex_to_real, md_demap, md_map


class AboveCapacityWarning(UserWarning):
    """Efficiency above 1: the code rate exceeds the channel capacity."""


def capacity(snr: float) -> float:
    """Capacity of one real Gaussian dimension, bits."""
    return 0.5 * math.log2(1.0 + snr)


def beta_efficiency(code_rate: float, snr: float) -> float:
    """Reconciliation efficiency ``rate / (0.5 log2(1 + snr))``."""
    if not 0 < code_rate < 1:
        raise ValueError("code_rate must lie in (0, 1)")
    if not snr > 0:
        raise ValueError("snr must be positive")
    beta = code_rate / capacity(snr)
    if beta > 1:
        warnings.warn(f"beta = {beta:.4f} > 1", AboveCapacityWarning, stacklevel=2)
    return beta


@dataclass(frozen=True)
class ReconciliationResult:
    """Outcome of :func:`run_reconciliation`.

    ``converged[i]`` refers to block ``i``; ``exact[i]`` confirms that
    Alice's decoded bits equal Bob's.
    """

    net_bits: int
    fer: float
    beta: float
    snr: float
    n_blocks: int
    converged: np.ndarray = field(repr=False)
    exact: np.ndarray = field(repr=False)
    iterations: np.ndarray = field(repr=False)


def linear_model(alice_real: np.ndarray, bob_real: np.ndarray) -> tuple[float, float, float]:
    """LMMSE fit ``alice = alpha * bob + noise``; returns (alpha, noise_var, snr)."""
    vb = float(np.var(bob_real))
    if vb == 0:
        raise ValueError("Bob's data have zero variance")
    alpha = float(np.mean((alice_real - alice_real.mean()) * (bob_real - bob_real.mean()))) / vb
    noise = float(np.var(alice_real)) - alpha * alpha * vb
    noise = max(noise, 1e-12 * max(float(np.var(alice_real)), 1e-300))
    return alpha, noise, alpha * alpha * vb / noise


def run_reconciliation(
    alice_symbols,
    bob_symbols,
    h: ParityCheckMatrix,
    d: int,
    rng: RngStream,
    max_iters: int = 200,
    model: tuple[float, float] | None = None,
) -> ReconciliationResult:
    """Reverse reconciliation of correlated symbol streams.

    Bob draws ``h.n`` random bits per block, maps his normalized data onto
    them and publishes the mapping messages and the syndrome ``H b``.
    Alice demaps her data into LLRs and decodes to that syndrome. Blocks
    that do not fill a codeword are discarded. ``model`` overrides the
    fitted (alpha, noise_var) of ``alice = alpha * bob + noise``.
    """
    a = complex_to_real(alice_symbols) if np.iscomplexobj(alice_symbols) else np.asarray(alice_symbols, float)
    b = complex_to_real(bob_symbols) if np.iscomplexobj(bob_symbols) else np.asarray(bob_symbols, float)
    if a.shape != b.shape:
        raise ValueError("symbol streams differ in length")
    if h.n % d:
        raise ValueError("code length must be a multiple of d")
    alpha, noise_var, snr = linear_model(a, b) if model is None else (*model, math.nan)
    if model is not None:
        snr = alpha * alpha * float(np.var(b)) / noise_var
    n_blocks = a.size // h.n
    converged = np.zeros(n_blocks, dtype=bool)
    exact = np.zeros(n_blocks, dtype=bool)
    iters = np.zeros(n_blocks, dtype=np.int64)
    for k in range(n_blocks):
        sl = slice(k * h.n, (k + 1) * h.n)
        xb = b[sl].reshape(-1, d)
        ya = a[sl].reshape(-1, d)
        bits = rng.integers(0, 2, h.n).astype(np.uint8)
        u = bits_to_u(bits, d)
        m = md_map(xb, u, d)
        syn = h.syndrome(bits)
        amp = abs(alpha) * np.linalg.norm(xb, axis=1) if model is not None else None
        llr = md_demap(np.sign(alpha or 1.0) * ya, m, noise_var, amp).reshape(-1)
        res = ldpc_decode(llr, h, max_iters, syndrome=syn)
        converged[k] = res.converged
        exact[k] = np.array_equal(res.bits, bits)
        iters[k] = res.iterations
    fer = 1.0 - float(np.mean(exact)) if n_blocks else math.nan
    payload = h.n - h.m
    net = int(np.sum(exact)) * payload
    beta = h.rate / capacity(snr) if snr > 0 and math.isfinite(snr) else math.nan
    return ReconciliationResult(net, fer, beta, snr, n_blocks, converged, exact, iters)
