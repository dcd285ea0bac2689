"""Integrable small polaron chain: graded transfer matrices, fusion hierarchy,
Bethe ansatz and verification reports.

Submodules
----------
grassmann   Grassmann numbers over the four odd boundary generators.
graded      Graded matrices, super tensor products, supertraces.
trigpoly    Laurent polynomials in ``exp(iu)`` and interpolation.
bulk        R-matrix, periodic monodromy and transfer matrix.
boundary    Reflection matrices and the open transfer matrix.
fusion      Fused R and K matrices, hierarchy and truncation identities.
bethe       TQ relations and Bethe equation solvers.
spectrum    Eigenvalue functions of commuting families.
cli         The ``polaron`` command.
"""
from .bulk import ModelParams, r_matrix, transfer_pbc
from .boundary import transfer_obc
from .grassmann import GrassmannNumber
from .report import VerificationReport

__version__ = "0.1.0"

__all__ = ["GrassmannNumber", "ModelParams", "VerificationReport", "r_matrix",
           "transfer_obc", "transfer_pbc", "__version__"]
