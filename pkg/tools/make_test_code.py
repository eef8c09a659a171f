"""Regenerate the bundled (3, 6)-regular LDPC test code.

Edges are placed column by column; each column picks the least-loaded
checks that do not close a 4-cycle with an existing column.
"""
import sys

import numpy as np

sys.path.insert(0, "src")
from cvqkd.reconciliation.ldpc import ParityCheckMatrix  # noqa: E402

N, DV, DC = 1024, 3, 6
M = N * DV // DC
rng = np.random.default_rng(20211102)
rows = [set() for _ in range(M)]
cols = []
for j in range(N):
    chosen = []
    for _ in range(DV):
        load = np.array([len(r) for r in rows])
        cand = np.flatnonzero(load < DC)
        cand = [c for c in cand if c not in chosen]
        neigh = set()
        for c in chosen:
            neigh |= rows[c]
        ok = [c for c in cand if not (rows[c] & neigh)] or cand
        low = min(len(rows[c]) for c in ok)
        ok = [c for c in ok if len(rows[c]) == low]
        chosen.append(int(rng.choice(ok)))
    for c in chosen:
        rows[c].add(j)
    cols.append(chosen)
ec = [c for j, cs in enumerate(cols) for c in cs]
ev = [j for j, cs in enumerate(cols) for _ in cs]
h = ParityCheckMatrix(N, M, ec, ev)
h.to_alist("src/cvqkd/data/ldpc_n1024_r050.alist")
print(h.n, h.m, h.n_edges, np.bincount(h.edge_check).min(), np.bincount(h.edge_check).max())
