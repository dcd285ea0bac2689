"""Root-of-unity truncation of the fusion hierarchy.

At eta_p = pi / (2 (p + 1)) the fused R-matrix and the fused transfer
matrices close back onto lower levels.  This prints the residual of each
identity for p = 1, 2, 3 on a chain of three sites, and the boundary
counterparts for a Grassmann-valued open chain of two sites.

    python demos/truncation_demo.py
"""
from polaron.bulk import ModelParams
from polaron.fusion import (check_truncation_k, check_truncation_obc, check_truncation_pbc,
                            check_truncation_r, eta_root)

for p in (1, 2, 3):
    print(f"p={p}, eta_p={eta_root(p):.6f}")
    for rep in (check_truncation_r(p), check_truncation_pbc(p, 3)):
        print("  " + rep.summary().replace("\n", "\n  "))

params = ModelParams.open(2, 0.3 + 0.1j, 0.4 + 0.2j, -0.7 + 0.1j,
                          alpha_m=0.3, beta_m=-0.2 + 0.1j, alpha_p=0.5, beta_p=0.7)
for n in (2, 3):
    for rep in (check_truncation_k(params, n), check_truncation_obc(params, n)):
        print(rep.summary())
