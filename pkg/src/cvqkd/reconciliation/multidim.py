"""Multidimensional mapping through normed division algebras (d = 1, 2, 4, 8).

Vectors of length ``d`` are read as reals, complex numbers, quaternions or
octonions (Cayley-Dickson doubling). Left multiplication by a unit element
is an orthogonal map, which is what the reconciliation needs: the public
message ``m = u * conj(x)`` rotates Bob's direction ``x`` onto ``u`` without
revealing ``u``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

DIMENSIONS = (1, 2, 4, 8)


def _check_d(d: int):
    if d not in DIMENSIONS:
        raise ValueError(f"d must be one of {DIMENSIONS}")


def conj(a: np.ndarray) -> np.ndarray:
    out = -np.asarray(a, dtype=float)
    out[..., 0] *= -1
    return out


def multiply(a, b) -> np.ndarray:
    """Cayley-Dickson product over the last axis (length 1, 2, 4 or 8)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = a.shape[-1]
    if d == 1:
        return a * b
    h = d // 2
    p, q = a[..., :h], a[..., h:]
    r, s = b[..., :h], b[..., h:]
    left = multiply(p, r) - multiply(conj(s), q)
    right = multiply(s, p) + multiply(q, conj(r))
    return np.concatenate([left, right], axis=-1)


@lru_cache(maxsize=None)
def _structure(d: int) -> np.ndarray:
    """Tensor ``T`` with ``(a * b)_i = sum_jk T[i, j, k] a_j b_k``."""
    eye = np.eye(d)
    t = np.empty((d, d, d))
    for j in range(d):
        for k in range(d):
            t[:, j, k] = multiply(eye[j], eye[k])
    t.setflags(write=False)
    return t


def left_matrix(m) -> np.ndarray:
    """Matrix ``M(m)`` with ``M(m) z = m * z``; batched over leading axes."""
    m = np.asarray(m, dtype=float)
    return np.einsum("ijk,...j->...ik", _structure(m.shape[-1]), m)


def apply_map(m, z) -> np.ndarray:
    """``M(m) z`` for (batches of) vectors."""
    return multiply(m, z)


def bits_to_u(bits, d: int) -> np.ndarray:
    """Antipodal unit vectors ``(1 - 2 b) / sqrt(d)``, reshaped to (-1, d)."""
    _check_d(d)
    b = np.asarray(bits).reshape(-1, d)
    return (1.0 - 2.0 * b) / np.sqrt(d)


def md_map(x, u, d: int | None = None) -> np.ndarray:
    """Public message ``m`` such that ``M(m) x / |x| = u``.

    ``x`` and ``u`` have shape ``(..., d)``; ``u`` must be unit norm.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d = x.shape[-1] if d is None else d
    _check_d(d)
    if x.shape[-1] != d or u.shape[-1] != d:
        raise ValueError("x and u must have length d on the last axis")
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("cannot map a zero vector")
    return multiply(u, conj(x / norm))


def md_demap(y, m, noise_var: float, amplitude=None, llr_cap: float = 50.0) -> np.ndarray:
    """Bit LLRs of the virtual binary channel seen by Alice.

    ``M(m) y`` equals ``A u`` plus Gaussian noise of variance ``noise_var``
    per dimension. ``amplitude`` is the channel-state estimate ``A`` per
    block; by default ``|y|``. LLRs are positive for bit 0 (``u_i > 0``).
    """
    y = np.asarray(y, dtype=float)
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    d = y.shape[-1]
    _check_d(d)
    v = multiply(m, y)
    amp = np.linalg.norm(y, axis=-1, keepdims=True) if amplitude is None else (
        np.asarray(amplitude, dtype=float).reshape(*y.shape[:-1], 1)
    )
    llr = 2.0 * amp / np.sqrt(d) * v / noise_var
    return np.clip(llr, -llr_cap, llr_cap)


def complex_to_real(symbols) -> np.ndarray:
    """Interleave real and imaginary parts: one complex symbol is two dimensions."""
    s = np.asarray(symbols, dtype=complex)
    return np.stack([s.real, s.imag], axis=-1).reshape(-1)
