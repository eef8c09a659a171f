"""Sparse parity-check matrices (alist format) and sum-product decoding."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np


class AlistError(ValueError):
    """Malformed alist file."""


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Binary ``m x n`` matrix stored as its edge list.

    ``edge_check[e]``, ``edge_var[e]`` give the row and column of edge ``e``;
    edges are sorted by check.
    """

    n: int
    m: int
    edge_check: np.ndarray
    edge_var: np.ndarray

    def __post_init__(self):
        ec = np.asarray(self.edge_check, dtype=np.int64)
        ev = np.asarray(self.edge_var, dtype=np.int64)
        if ec.shape != ev.shape or ec.ndim != 1:
            raise ValueError("edge arrays must be 1-D and of equal length")
        if ec.size and (ec.min() < 0 or ec.max() >= self.m or ev.min() < 0 or ev.max() >= self.n):
            raise ValueError("edge index out of range")
        order = np.lexsort((ev, ec))
        ec, ev = ec[order], ev[order]
        if np.any((np.diff(ec) == 0) & (np.diff(ev) == 0)):
            raise ValueError("duplicate entries")
        if np.any(np.bincount(ec, minlength=self.m) == 0):
            raise ValueError("empty row")
        if np.any(np.bincount(ev, minlength=self.n) == 0):
            raise ValueError("empty column")
        for a in (ec, ev):
            a.setflags(write=False)
        object.__setattr__(self, "edge_check", ec)
        object.__setattr__(self, "edge_var", ev)

    @property
    def n_edges(self) -> int:
        return self.edge_check.size

    @property
    def rate(self) -> float:
        """Design rate ``1 - m / n``."""
        return 1.0 - self.m / self.n

    @classmethod
    def from_dense(cls, h) -> "ParityCheckMatrix":
        h = np.asarray(h)
        r, c = np.nonzero(h % 2)
        return cls(h.shape[1], h.shape[0], r, c)

    def to_dense(self) -> np.ndarray:
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        h[self.edge_check, self.edge_var] = 1
        return h

    def syndrome(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        if bits.shape != (self.n,):
            raise ValueError(f"expected {self.n} bits")
        s = np.bincount(self.edge_check, weights=bits[self.edge_var], minlength=self.m)
        return (s.astype(np.int64) % 2).astype(np.uint8)

    # ---------------------------------------------------------- alist I/O

    @classmethod
    def from_alist(cls, source) -> "ParityCheckMatrix":
        """Parse alist text from a path, file object or string."""
        if hasattr(source, "read"):
            text = source.read()
        elif isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            with open(source) as fh:
                text = fh.read()
        elif isinstance(source, str) and "\n" in source:
            text = source
        else:
            raise FileNotFoundError(source)
        return _parse_alist(text)

    def to_alist(self, target=None) -> str:
        col_lists = [[] for _ in range(self.n)]
        row_lists = [[] for _ in range(self.m)]
        for c, v in zip(self.edge_check.tolist(), self.edge_var.tolist()):
            row_lists[c].append(v + 1)
            col_lists[v].append(c + 1)
        dc = max(len(x) for x in col_lists)
        dr = max(len(x) for x in row_lists)
        out = io.StringIO()
        out.write(f"{self.n} {self.m}\n{dc} {dr}\n")
        out.write(" ".join(str(len(x)) for x in col_lists) + "\n")
        out.write(" ".join(str(len(x)) for x in row_lists) + "\n")
        for lst, deg in [(c, dc) for c in col_lists] + [(r, dr) for r in row_lists]:
            out.write(" ".join(str(v) for v in sorted(lst) + [0] * (deg - len(lst))) + "\n")
        text = out.getvalue()
        if target is not None:
            with open(target, "w") as fh:
                fh.write(text)
        return text


def _parse_alist(text: str) -> ParityCheckMatrix:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    try:
        rows = [[int(v) for v in ln] for ln in lines]
    except ValueError as exc:
        raise AlistError(f"non-integer token: {exc}") from None
    if len(rows) < 4 or len(rows[0]) != 2 or len(rows[1]) != 2:
        raise AlistError("header must be 'n m' then 'max_col_deg max_row_deg'")
    (n, m), (dc, dr) = rows[0], rows[1]
    if n <= 0 or m <= 0 or dc <= 0 or dr <= 0:
        raise AlistError("sizes and degrees must be positive")
    col_deg, row_deg = rows[2], rows[3]
    if len(col_deg) != n:
        raise AlistError(f"expected {n} column degrees, got {len(col_deg)}")
    if len(row_deg) != m:
        raise AlistError(f"expected {m} row degrees, got {len(row_deg)}")
    if max(col_deg) > dc or max(row_deg) > dr or min(col_deg) < 1 or min(row_deg) < 1:
        raise AlistError("degree list inconsistent with declared maxima")
    if sum(col_deg) != sum(row_deg):
        raise AlistError("column and row degrees disagree on the edge count")
    body = rows[4:]
    if len(body) != n + m:
        raise AlistError(f"expected {n + m} incidence lines, got {len(body)}")
    edges_c = set()
    for j, (lst, deg) in enumerate(zip(body[:n], col_deg)):
        ent = [v for v in lst if v != 0]
        if len(ent) != deg or any(not 1 <= v <= m for v in ent) or len(lst) > dc:
            raise AlistError(f"column {j + 1}: incidence list does not match its degree")
        edges_c.update((v - 1, j) for v in ent)
    edges_r = set()
    for i, (lst, deg) in enumerate(zip(body[n:], row_deg)):
        ent = [v for v in lst if v != 0]
        if len(ent) != deg or any(not 1 <= v <= n for v in ent) or len(lst) > dr:
            raise AlistError(f"row {i + 1}: incidence list does not match its degree")
        edges_r.update((i, v - 1) for v in ent)
    if edges_c != edges_r or len(edges_c) != sum(col_deg):
        raise AlistError("row and column incidence lists disagree")
    e = np.array(sorted(edges_c), dtype=np.int64)
    return ParityCheckMatrix(n, m, e[:, 0], e[:, 1])


# ------------------------------------------------------------- decoding


@dataclass(frozen=True)
class DecodeResult:
    bits: np.ndarray
    converged: bool
    iterations: int


def _phi(x):
    # -log(tanh(x / 2)), self-inverse on (0, inf)
    x = np.clip(x, 1e-12, 50.0)
    return -np.log(np.tanh(x / 2))


def ldpc_decode(
    llr,
    h: ParityCheckMatrix,
    max_iters: int = 200,
    syndrome=None,
    llr_cap: float = 50.0,
) -> DecodeResult:
    """Sum-product decoding with a flooding schedule.

    LLRs are positive for bit 0. With ``syndrome`` the decoder searches for
    the word satisfying ``H b = syndrome`` instead of a codeword. Decoding
    stops as soon as the hard decision meets the target syndrome.
    """
    llr = np.clip(np.asarray(llr, dtype=float), -llr_cap, llr_cap)
    if llr.shape != (h.n,):
        raise ValueError(f"expected {h.n} LLRs, got shape {llr.shape}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    target = np.zeros(h.m, dtype=np.uint8) if syndrome is None else np.asarray(syndrome, dtype=np.uint8)
    if target.shape != (h.m,):
        raise ValueError(f"expected {h.m} syndrome bits")
    ec, ev = h.edge_check, h.edge_var
    starts = np.flatnonzero(np.r_[True, np.diff(ec) != 0])
    check_sign = 1.0 - 2.0 * target[ec]
    c2v = np.zeros(ec.size)
    bits = (llr < 0).astype(np.uint8)
    for it in range(1, max_iters + 1):
        total = llr + np.bincount(ev, weights=c2v, minlength=h.n)
        v2c = total[ev] - c2v
        mag = _phi(np.abs(v2c))
        neg = (v2c < 0).astype(np.int64)
        mag_sum = np.add.reduceat(mag, starts)[ec]
        neg_sum = np.add.reduceat(neg, starts)[ec]
        sign = np.where((neg_sum - neg) % 2 == 1, -1.0, 1.0) * check_sign
        c2v = np.clip(sign * _phi(mag_sum - mag), -llr_cap, llr_cap)
        total = llr + np.bincount(ev, weights=c2v, minlength=h.n)
        bits = (total < 0).astype(np.uint8)
        if np.array_equal(h.syndrome(bits), target):
            return DecodeResult(bits, True, it)
    return DecodeResult(bits, False, max_iters)
