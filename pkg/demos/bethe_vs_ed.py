"""Bethe states of a periodic chain against exact diagonalisation.

Solves the Bethe equations sector by sector for N = 4, evaluates the TQ
eigenvalue of each state and pairs it with an exact eigenvalue of the
transfer matrix.

    python demos/bethe_vs_ed.py
"""
import numpy as np

from polaron.bethe import ed_eigenfunctions, lambda_tq, match_sector
from polaron.bulk import ModelParams

N, ETA = 4, 0.3 + 0.1j
U0 = 0.31 + 0.17j

params = ModelParams.periodic(N, ETA)
polys, Ms = ed_eigenfunctions(params)
us = np.array([0.2 + 0.05j, -0.4 + 0.1j, 0.7 - 0.02j])

for M in range(N + 1):
    sector = [p for p, m in zip(polys, Ms) if m == M]
    sm = match_sector(params, M, sector, us)
    print(f"M={M}: {len(sector)} eigenvalues, {sm.candidates} Bethe solutions")
    for p, s in zip(sector, sm.matched):
        ed = p(U0).body
        if s is None:
            print(f"    ED {ed:.10f}  (no Bethe state)")
            continue
        roots = ", ".join(f"{r:.6f}" for r in s.roots) or "-"
        extra = f" + {'/'.join(s.pairs)} pair" if s.pairs else ""
        print(f"    ED {ed:.10f}  |TQ - ED| = {abs(lambda_tq(U0, s).body - ed):.1e}  roots: {roots}{extra}")
