"""Grassmann structure of the open chain with odd boundary parameters.

Prints the nilpotent part of every eigenvalue of the open transfer matrix
at N = 1 and N = 2, its coefficient along X = beta_+ alpha_- - alpha_+ beta_-,
and the outcome of the least-squares probe for a nilpotent correction of
the Q-function.

    python demos/nondiagonal_souls.py
"""
import numpy as np

from polaron.bethe import rho_probe
from polaron.boundary import transfer_obc
from polaron.bulk import ModelParams
from polaron.spectrum import eigen_grassmann, joint_basis, state_labels

ETA, PSI = 0.3 + 0.1j, (0.4 + 0.2j, -0.7 + 0.1j)
ODD = dict(alpha_m=0.3, beta_m=-0.2 + 0.1j, alpha_p=0.5, beta_p=0.7)
U0 = 0.27 + 0.05j

for N in (1, 2):
    p = ModelParams.open(N, ETA, *PSI, **ODD)
    X = p.odd_invariant
    mats = [transfer_obc(u, p) for u in (0.2, 0.5 + 0.1j, -0.3, U0)]
    basis = joint_basis(mats)
    parity = state_labels(basis, N)["parity"]
    print(f"N={N}, u={U0}")
    for v, par in zip(eigen_grassmann(mats[-1], basis).values, parity):
        c = np.vdot(X.coeffs, v.soul.coeffs) / np.vdot(X.coeffs, X.coeffs)
        rest = np.abs(v.soul.coeffs - c * X.coeffs).max()
        print(f"    parity {'+-'[par]}  body {v.body:.8f}  soul = ({c:.6f}) X  (remainder {rest:.1e})")
    probe = rho_probe(p)
    for s in probe["states"]:
        if s["status"] == "fitted":
            print(f"    rho fit, state {s['state']} (M={s['M']}): best degree {s['best_degree']}, "
                  f"residual {s['best_residual']:.1e}")
