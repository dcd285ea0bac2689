"""Bulk integrable structure of the small polaron chain.

The graded six-vertex R-matrix on ``BF (x) BF``,

    R(u) = 1/sin(2 eta) * [[sin(u+2eta), 0, 0, 0],
                           [0, sin(u), sin(2eta), 0],
                           [0, sin(2eta), sin(u), 0],
                           [0, 0, 0, -sin(u+2eta)]],

its Lax operators ``L_j(u) = R_{0j}(u)``, the periodic monodromy
``T(u) = L_N(u) ... L_1(u)`` and transfer matrix ``tau(u) = str_0 T(u)``.
Local fermions are graded embeddings, not Jordan-Wigner strings.

Everything here is a plain function of ``(u, eta)`` or of a
:class:`ModelParams`; operators are :class:`~polaron.graded.GradedMatrix`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from numbers import Number

import numpy as np

from . import grassmann as gr
from .graded import (BF, GradedMatrix, embed, flat_parity, local_operator, partial_super_trace,
                     partial_super_transpose, sigma_z_string, site_operator)
from .grassmann import GrassmannNumber
from .report import VerificationReport

PERIODIC, DIAGONAL, NONDIAGONAL = "periodic", "diagonal", "non-diagonal"
BOUNDARY_KINDS = (PERIODIC, DIAGONAL, NONDIAGONAL)
ODD_NAMES = ("alpha_m", "beta_m", "alpha_p", "beta_p")
DEFAULT_ETAS = (0.3 + 0.1j, 0.37, np.pi / 6, np.pi / 4)


class SingularAnisotropy(ValueError):
    """``sin(2 eta)`` vanishes, so the R-matrix normalisation is undefined."""


class BadParams(ValueError):
    pass


class BadM(ValueError):
    pass


def _zero() -> GrassmannNumber:
    return GrassmannNumber.scalar(0.0)


def _odd(value, name) -> GrassmannNumber:
    """A number ``c`` means ``c * generator``; Grassmann input is kept but checked."""
    if isinstance(value, GrassmannNumber):
        return value
    if isinstance(value, (dict, str)):
        return gr.odd_parameter(value)
    if isinstance(value, (list, tuple)):
        value = complex(value[0], value[1])
    return GrassmannNumber.generator(name, complex(value))


@dataclass(frozen=True)
class ModelParams:
    """Chain length, anisotropy and boundary data.

    Parameters
    ----------
    N : int
        Number of sites.
    eta : complex
        Anisotropy; ``t = 1`` and ``V = -cos(2 eta)``.
    boundary : {"periodic", "diagonal", "non-diagonal"}
    psi_minus, psi_plus : complex or even GrassmannNumber
        Diagonal boundary parameters (open chains only).
    alpha_m, beta_m, alpha_p, beta_p : GrassmannNumber
        Odd off-diagonal boundary parameters.  Zero for diagonal chains.
    omega_plus_override : complex, optional
        Replaces ``omega_+`` where ``cos(2 eta) = 0`` makes the default
        normalisation singular.  All identities are homogeneous in
        ``omega_+`` so any finite value is admissible there.
    """

    N: int
    eta: complex
    boundary: str = PERIODIC
    psi_minus: complex | GrassmannNumber | None = None
    psi_plus: complex | GrassmannNumber | None = None
    alpha_m: GrassmannNumber = field(default_factory=_zero)
    beta_m: GrassmannNumber = field(default_factory=_zero)
    alpha_p: GrassmannNumber = field(default_factory=_zero)
    beta_p: GrassmannNumber = field(default_factory=_zero)
    omega_plus_override: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "eta", complex(self.eta))
        for name in ODD_NAMES:
            object.__setattr__(self, name, _odd(getattr(self, name), name))
        self.validate()

    # -- construction -------------------------------------------------
    @classmethod
    def periodic(cls, N: int, eta) -> "ModelParams":
        return cls(N, eta)

    @classmethod
    def open(cls, N: int, eta, psi_minus, psi_plus, alpha_m=0.0, beta_m=0.0,
             alpha_p=0.0, beta_p=0.0, **kw) -> "ModelParams":
        """Open chain; numeric odd parameters are coefficients of the generators."""
        odd = [_odd(v, n) for v, n in zip((alpha_m, beta_m, alpha_p, beta_p), ODD_NAMES)]
        kind = NONDIAGONAL if any(o.norm() > 0 for o in odd) else DIAGONAL
        return cls(N, eta, kind, psi_minus, psi_plus, *odd, **kw)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def diagonal_part(self) -> "ModelParams":
        """Same chain with the odd boundary parameters switched off."""
        return replace(self, boundary=DIAGONAL, alpha_m=_zero(), beta_m=_zero(),
                       alpha_p=_zero(), beta_p=_zero())

    # -- validation ----------------------------------------------------
    def validate(self) -> None:
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise BadParams(f"N must be a positive integer, got {self.N!r}")
        if self.boundary not in BOUNDARY_KINDS:
            raise BadParams(f"unknown boundary kind {self.boundary!r}")
        if abs(np.sin(2 * self.eta)) < 1e-12:
            raise SingularAnisotropy(f"sin(2 eta) = 0 at eta = {self.eta}")
        if self.boundary == PERIODIC:
            return
        for name in ("psi_minus", "psi_plus"):
            psi = getattr(self, name)
            if psi is None:
                raise BadParams(f"{name} is required for open boundaries")
            body = psi.body if isinstance(psi, GrassmannNumber) else complex(psi)
            if isinstance(psi, GrassmannNumber) and psi.odd_part().norm() > 0:
                raise BadParams(f"{name} must be Grassmann-even")
            if abs(np.sin(body)) < 1e-12:
                raise BadParams(f"sin({name}) has vanishing body")
        for name in ODD_NAMES:
            x = getattr(self, name)
            if x.even_part().norm() > 0:
                raise BadParams(f"{name} must be Grassmann-odd")
        if self.boundary == DIAGONAL and not self.is_diagonal:
            raise BadParams("diagonal boundary kind with nonzero odd parameters")

    # -- derived quantities --------------------------------------------
    @property
    def is_open(self) -> bool:
        return self.boundary != PERIODIC

    @property
    def is_diagonal(self) -> bool:
        return all(getattr(self, n).norm() == 0 for n in ODD_NAMES)

    @property
    def V(self) -> complex:
        return -np.cos(2 * self.eta)

    @property
    def omega_minus(self):
        return 1.0 / gr.sin(self.psi_minus)

    @property
    def omega_plus(self):
        if self.omega_plus_override is not None:
            return self.omega_plus_override
        c = np.cos(2 * self.eta)
        if abs(c) < 1e-10:
            raise BadParams("omega_+ is singular at cos(2 eta) = 0; pass omega_plus_override")
        return 1.0 / (2 * c * gr.sin(self.psi_plus))

    @property
    def psi_minus_body(self) -> complex:
        return _body(self.psi_minus)

    @property
    def psi_plus_body(self) -> complex:
        return _body(self.psi_plus)

    @property
    def odd_invariant(self) -> GrassmannNumber:
        """``beta_+ alpha_- - alpha_+ beta_-``, the even combination that controls
        the non-diagonal part of the spectrum."""
        return self.beta_p * self.alpha_m - self.alpha_p * self.beta_m

    def to_dict(self) -> dict:
        d = {"N": int(self.N), "eta": _cpair(self.eta), "boundary": self.boundary}
        if self.is_open:
            d["psi_minus"] = _cpair(self.psi_minus_body)
            d["psi_plus"] = _cpair(self.psi_plus_body)
            for n in ODD_NAMES:
                d[n] = {k: _cpair(v) for k, v in sorted(getattr(self, n).to_dict().items())}
        if self.omega_plus_override is not None:
            d["omega_plus_override"] = _cpair(self.omega_plus_override)
        return d


def _body(x) -> complex:
    return x.body if isinstance(x, GrassmannNumber) else complex(x)


def _cpair(z) -> list[float]:
    z = complex(z)
    return [float(f"{z.real:.15g}"), float(f"{z.imag:.15g}")]


# -- scalar kernels ---------------------------------------------------------

def g(u, eta):
    """``g(u) = -sin(u - 2 eta) / sin(2 eta)``; ``g(0) = 1``."""
    return -np.sin(u - 2 * eta) / np.sin(2 * eta)


def zeta(u, eta):
    """Unitarity factor ``zeta(u) = g(u) g(-u)``."""
    return g(u, eta) * g(-u, eta)


# -- R-matrix ---------------------------------------------------------------

def r_matrix(u, eta) -> GradedMatrix:
    """The 4x4 graded R-matrix on ``BF (x) BF`` (row order BB, BF, FB, FF).

    Raises
    ------
    SingularAnisotropy
        if ``sin(2 eta) = 0``.
    """
    s = np.sin(2 * eta)
    if abs(s) < 1e-12:
        raise SingularAnisotropy(f"sin(2 eta) = 0 at eta = {eta}")
    a, b = np.sin(u + 2 * eta), np.sin(u)
    m = np.array([[a, 0, 0, 0], [0, b, s, 0], [0, s, b, 0], [0, 0, 0, -a]], dtype=complex) / s
    return GradedMatrix(m, (BF, BF))


def r21(R: GradedMatrix) -> GradedMatrix:
    """``R_21``: the same operator with its two factors exchanged."""
    return embed(R, (1, 0), R.rows)


def conjugated_r(u, eta) -> GradedMatrix:
    """``Rbar_12(u) = sigma^z_1 R_12(u) sigma^z_1``."""
    s1 = embed(local_operator("sz"), (0,), (BF, BF))
    return s1 @ r_matrix(u, eta) @ s1


def projector_minus(eta) -> GradedMatrix:
    """Rank-one projector ``P^- = -R(-2 eta) / 2`` on ``BF (x) BF``."""
    return r_matrix(-2 * eta, eta) * (-0.5)


def check_r_properties(eta, n_samples: int = 100, seed: int = 0, tol: float = 1e-12) -> VerificationReport:
    """Residuals of the R-matrix property battery at random spectral parameters."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport("rmatrix", "graded six-vertex R-matrix properties",
                             params={"eta": _cpair(eta), "samples": n_samples, "seed": seed})
    F3 = [BF] * 3
    P = r_matrix(0.0, eta)
    from .graded import graded_permutation
    Pg = graded_permutation()
    sz2 = embed(local_operator("sz"), (1,), (BF, BF))
    res = {k: [] for k in ("ybe", "p_symmetry", "t_symmetry", "regularity", "unitarity",
                           "crossing", "periodicity")}
    res["regularity"].append((P - Pg).norm())
    for _ in range(n_samples):
        u, v = rng.normal(size=2) + 1j * rng.normal(size=2) * 0.3
        Ruv, Ru, Rv = r_matrix(u - v, eta), r_matrix(u, eta), r_matrix(v, eta)
        lhs = embed(Ruv, (0, 1), F3) @ embed(Ru, (0, 2), F3) @ embed(Rv, (1, 2), F3)
        rhs = embed(Rv, (1, 2), F3) @ embed(Ru, (0, 2), F3) @ embed(Ruv, (0, 1), F3)
        res["ybe"].append((lhs - rhs).norm())
        res["p_symmetry"].append((r21(Ru) - Ru).norm())
        st12 = partial_super_transpose(partial_super_transpose(Ru, 0), 1)
        ist12 = partial_super_transpose(partial_super_transpose(Ru, 0, "ist"), 1, "ist")
        res["t_symmetry"].append(max((st12 - r21(Ru)).norm(), (ist12 - r21(Ru)).norm()))
        res["unitarity"].append((Ru @ r21(r_matrix(-u, eta)) - zeta(u, eta) * GradedMatrix.identity((BF, BF))).norm())
        cross = (partial_super_transpose(r21(r_matrix(-u - 4 * eta, eta)), 1)
                 @ partial_super_transpose(r21(Ru), 0))
        res["crossing"].append((cross - zeta(u + 2 * eta, eta) * GradedMatrix.identity((BF, BF))).norm())
        res["periodicity"].append((r_matrix(u + np.pi, eta) + sz2 @ Ru @ sz2).norm())
    for k, v in res.items():
        rep.add(k, v, tol)
    return rep


# -- Lax operators, monodromy and transfer matrix -----------------------------

def chain_factors(N: int, n_aux: int = 1, aux=BF) -> list:
    return [tuple(aux)] * n_aux + [BF] * N


def lax(u, j: int, N: int, eta) -> GradedMatrix:
    """``L_j(u) = R_{0j}(u)`` on ``aux (x) site_1 (x) ... (x) site_N`` (``j`` 1-based)."""
    from .graded import BadSite
    if not 1 <= j <= N:
        raise BadSite(f"site {j} outside 1..{N}")
    return embed(r_matrix(u, eta), (0, j), chain_factors(N))


def lax_entries(u, j: int, N: int, eta) -> list[list[GradedMatrix]]:
    """Quantum-space operators ``L^a_b`` with ``L_j = sum_ab e_a^b (x)_s L^a_b``.

    In this reading the diagonal entries are ``(sin(u) n + sin(u+2eta) nbar)/s``
    and ``(sin(u) nbar - sin(u+2eta) n)/s`` and the off-diagonal entries are
    ``-c^dag_j`` (row 0) and ``c_j`` (row 1).
    """
    s = np.sin(2 * eta)
    op = lambda name: site_operator(name, j, N)
    return [[(np.sin(u) * op("n") + np.sin(u + 2 * eta) * op("nbar")) / s, -op("cdag")],
            [op("c"), (np.sin(u) * op("nbar") - np.sin(u + 2 * eta) * op("n")) / s]]


def monodromy_from_local(R_loc: GradedMatrix, N: int, reverse: bool = False) -> GradedMatrix:
    """``R_{0N} ... R_{01}`` (or ``R_{01} ... R_{0N}`` if ``reverse``) for a local
    auxiliary-site operator whose first factor is the auxiliary space."""
    F = [R_loc.rows[0]] + [BF] * N
    T = GradedMatrix.identity(F, R_loc.algebra)
    for j in range(1, N + 1):
        L = embed(R_loc, (0, j), F)
        T = T @ L if reverse else L @ T
    return T


def monodromy_pbc(u, N: int, eta) -> GradedMatrix:
    """``T(u) = L_N(u) ... L_1(u)``; the auxiliary space is factor 0."""
    return monodromy_from_local(r_matrix(u, eta), N)


def transfer_pbc(u, N: int, eta) -> GradedMatrix:
    """Periodic super transfer matrix ``tau(u) = str_0 T(u)``."""
    return partial_super_trace(monodromy_pbc(u, N, eta), 0)


def hamiltonian_pbc(N: int, eta) -> GradedMatrix:
    """``H = sum_j [-(c^dag_{j+1} c_j + c^dag_j c_{j+1}) + V (n_j n_{j+1} + nbar_j nbar_{j+1})]``
    with ``V = -cos(2 eta)`` and site ``N+1`` identified with site 1.

    Needs ``N >= 2``: a single site has no genuine bond to wrap around.
    """
    if N < 2:
        raise BadParams("the periodic Hamiltonian needs at least two sites")
    V = -np.cos(2 * eta)
    op = lambda name, j: site_operator(name, (j - 1) % N + 1, N)
    H = GradedMatrix.zeros([BF] * N)
    for j in range(1, N + 1):
        H = H - (op("cdag", j + 1) @ op("c", j) + op("cdag", j) @ op("c", j + 1))
        H = H + V * (op("n", j + 1) @ op("n", j) + op("nbar", j + 1) @ op("nbar", j))
    return H


def derivative(f, u0=0.0, h: float = 1e-6) -> GradedMatrix:
    """Central difference with one Richardson step (error ``O(h^4)``)."""
    d = lambda hh: (f(u0 + hh) - f(u0 - hh)) / (2 * hh)
    return (4.0 * d(h / 2) - d(h)) * (1.0 / 3.0)


def check_h_log_derivative(N: int, eta, h: float = 1e-6, tol: float = 1e-7) -> VerificationReport:
    """``-sin(2 eta) tau(0)^-1 tau'(0)`` against the density-sum Hamiltonian.

    ``tau(0)`` is the graded shift operator, so its inverse is exact.
    """
    rep = VerificationReport("hamiltonian-pbc", "periodic Hamiltonian as logarithmic derivative",
                             params={"N": N, "eta": _cpair(eta), "h": h})
    t0 = transfer_pbc(0.0, N, eta).body
    dt = derivative(lambda u: transfer_pbc(u, N, eta), 0.0, h).body
    Hnum = -np.sin(2 * eta) * np.linalg.solve(t0, dt)
    rep.add("log-derivative", np.abs(Hnum - hamiltonian_pbc(N, eta).body).max(), tol)
    return rep


# -- super quantum determinant ------------------------------------------------

def _two_aux_factors(N, aux=BF):
    return [tuple(aux), tuple(aux)] + [BF] * N


def sqd_pbc_defining(u, N: int, eta) -> GradedMatrix:
    """``str_12 { P^-_12 T_1(u) T_2(u + 2 eta) }`` as a quantum-space operator."""
    F = _two_aux_factors(N)
    q = tuple(range(2, N + 2))
    T1 = embed(monodromy_pbc(u, N, eta), (0,) + q, F)
    T2 = embed(monodromy_pbc(u + 2 * eta, N, eta), (1,) + q, F)
    return partial_super_trace(embed(projector_minus(eta), (0, 1), F) @ T1 @ T2, (0, 1))


def minus_sigma_string(N: int) -> GradedMatrix:
    """``prod_i (-sigma^z_{q_i})``."""
    return sigma_z_string(N) * ((-1.0) ** N)


def sqd_pbc(u, N: int, eta) -> GradedMatrix:
    """Closed form ``delta(u) = -zeta^N(u + 2 eta) prod_i (-sigma^z_i)``."""
    return minus_sigma_string(N) * (-zeta(u + 2 * eta, eta) ** N)


def sqd_hat_defining(u, N: int, eta) -> GradedMatrix:
    """``str_12 { P^-_12 That_2(u) That_1(u + 2 eta) }``."""
    from .boundary import t_hat_pbc_chain
    F = _two_aux_factors(N)
    q = tuple(range(2, N + 2))
    T2 = embed(t_hat_pbc_chain(u, N, eta), (1,) + q, F)
    T1 = embed(t_hat_pbc_chain(u + 2 * eta, N, eta), (0,) + q, F)
    return partial_super_trace(embed(projector_minus(eta), (0, 1), F) @ T2 @ T1, (0, 1))


def sqd_hat(u, N: int, eta) -> GradedMatrix:
    """Closed form ``-zeta^{-N}(u) prod_i (-sigma^z_i)``."""
    return minus_sigma_string(N) * (-1.0 / zeta(u, eta) ** N)


def check_sqd_pbc(N: int, eta, n_samples: int = 5, seed: int = 0, tol: float = 1e-12) -> VerificationReport:
    """Closed forms of the periodic super quantum determinants against their
    defining supertraces, and centrality of ``sigma^z delta`` with respect to
    the monodromy entries."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport("qdet-pbc", "periodic super quantum determinant",
                             params={"N": int(N), "eta": _cpair(eta)})
    d, dh, cen = [], [], []
    for _ in range(n_samples):
        u, w = rng.normal(size=2) * 0.6 + 0.2j * rng.normal(size=2)
        D = sqd_pbc(u, N, eta)
        Ddef = sqd_pbc_defining(u, N, eta)
        d.append((Ddef - D).norm() / max(1.0, D.norm()))
        Dh = sqd_hat(u, N, eta)
        dh.append((sqd_hat_defining(u, N, eta) - Dh).norm() / max(1.0, Dh.norm()))
        T = monodromy_pbc(w, N, eta)
        S = embed(sigma_z_string(N) @ Ddef, tuple(range(1, N + 1)), T.rows)
        cen.append(S.commutator(T).norm() / max(1.0, S.norm() * T.norm()))
    rep.add("delta(u) closed form", d, tol)
    rep.add("delta_hat(u) closed form", dh, tol)
    rep.add("[sigma^z delta(u), T(w)] = 0 (defining delta)", cen, tol)
    return rep


# -- asymptotics --------------------------------------------------------------

def asymptotics_pbc(N: int, M: int, eta) -> tuple[int, complex]:
    """Predicted leading ``z^N`` coefficient of a transfer-matrix eigenvalue in
    the ``M``-particle sector (``z = exp(iu)``).

    Raises
    ------
    BadM
        unless ``0 <= M <= N``.
    """
    if not 0 <= M <= N:
        raise BadM(f"particle number {M} outside 0..{N}")
    pref = (np.exp(1j * eta) / (np.exp(2j * eta) - np.exp(-2j * eta))) ** N
    c = pref * (np.exp(1j * N * eta) * np.exp(-2j * M * eta)
                - (-1) ** M * np.exp(-1j * N * eta) * np.exp(2j * M * eta))
    return N, complex(c)


def number_sectors(N: int) -> np.ndarray:
    """Particle number of every basis state of ``N`` sites."""
    from .graded import _digit_parities
    return _digit_parities([BF] * N).sum(axis=0)


def parity_sectors(N: int) -> np.ndarray:
    return flat_parity([BF] * N)
