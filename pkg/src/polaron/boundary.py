"""Open boundaries: K-matrices, reflection algebra and the open transfer matrix.

With ``v = u + 2 eta`` the boundary super matrices are

    K^-(u) = omega_- [[sin(u + psi_-),  alpha_- sin(2u)],
                      [beta_- sin(2u),  -sin(u - psi_-)]],
    K^+(u) = omega_+ [[sin(v + psi_+),  alpha_+ sin(2v)],
                      [beta_+ sin(2v),  sin(v - psi_+)]],

with ``omega_- = 1/sin(psi_-)`` and ``omega_+ = 1/(2 cos(2eta) sin(psi_+))``.
The odd parameters multiply from the left.  The open transfer matrix is

    tau(u) = str_0 { K^+_0(u) T(u) K^-_0(u) That(u) },
    That(u) = zeta(u)^-N R_01(u) ... R_0N(u) = T(-u)^-1 .
"""
from __future__ import annotations

import numpy as np

from . import grassmann as gr
from .bulk import (BF, ModelParams, _cpair, conjugated_r, derivative, g, projector_minus, r21,
                   r_matrix, zeta)
from .graded import (GradedMatrix, embed, local_operator, partial_super_trace, partial_super_transpose,
                     sigma_z_string, site_operator, super_trace)
from .grassmann import GrassmannNumber
from .report import VerificationReport


class SingularZeta(ZeroDivisionError):
    """``zeta(u) = 0``: the inverse monodromy has a pole."""


# -- boundary matrices ------------------------------------------------------

def boundary_entries(u, params: ModelParams) -> dict:
    """Diagonal entries of ``K^-(u)`` and ``K^+(u)``, named by side and position."""
    e = params.eta
    wm, wp = params.omega_minus, params.omega_plus
    pm, pp = params.psi_minus, params.psi_plus
    v = u + 2 * e
    return {
        "alpha_minus": wm * gr.sin(pm + u),
        "delta_minus": wm * gr.sin(pm - u),
        "alpha_plus": wp * gr.sin(v + pp),
        "delta_plus": wp * gr.sin(v - pp),
    }


def k_minus(u, params: ModelParams) -> GradedMatrix:
    k = boundary_entries(u, params)
    off = params.omega_minus * np.sin(2 * u)
    return GradedMatrix.from_entries([[k["alpha_minus"], params.alpha_m * off],
                                      [params.beta_m * off, k["delta_minus"]]], (BF,))


def k_plus(u, params: ModelParams) -> GradedMatrix:
    k = boundary_entries(u, params)
    off = params.omega_plus * np.sin(2 * (u + 2 * params.eta))
    return GradedMatrix.from_entries([[k["alpha_plus"], params.alpha_p * off],
                                      [params.beta_p * off, k["delta_plus"]]], (BF,))


def dual_params(params: ModelParams) -> ModelParams:
    """Parameters for which ``K^-`` reproduces ``K^+``: ``(alpha_-, beta_-, psi_-) ->
    (-alpha_+, beta_+, -psi_+)``."""
    return params.with_(alpha_m=-params.alpha_p, beta_m=params.beta_p, psi_minus=-params.psi_plus)


def k_plus_from_minus(u, params: ModelParams) -> GradedMatrix:
    """``K^+(u) = K^-(-u - 2eta)|_dual  sigma^z / (2 cos 2eta)``."""
    sz = local_operator("sz")
    return (k_minus(-u - 2 * params.eta, dual_params(params)) @ sz) * (1 / (2 * np.cos(2 * params.eta)))


# -- monodromies ------------------------------------------------------------

def monodromy(u, N: int, eta) -> GradedMatrix:
    from .bulk import monodromy_pbc
    return monodromy_pbc(u, N, eta)


def t_hat_pbc_chain(u, N: int, eta) -> GradedMatrix:
    """``That(u) = zeta(u)^-N R_01(u) ... R_0N(u)``.

    Raises
    ------
    SingularZeta
        at zeros of ``zeta``.
    """
    z = zeta(u, eta)
    if abs(z) < 1e-12:
        raise SingularZeta(f"zeta({u}) = 0")
    from .bulk import monodromy_from_local
    return monodromy_from_local(r_matrix(u, eta), N, reverse=True) * (1.0 / z ** N)


t_hat = t_hat_pbc_chain


def dressed_k_minus(u, params: ModelParams) -> GradedMatrix:
    """``T(u) K^-_0(u) That(u)`` on auxiliary (x) quantum space."""
    N, e = params.N, params.eta
    F = [BF] * (N + 1)
    return monodromy(u, N, e) @ embed(k_minus(u, params), (0,), F) @ t_hat(u, N, e)


def transfer_obc(u, params: ModelParams) -> GradedMatrix:
    F = [BF] * (params.N + 1)
    return partial_super_trace(embed(k_plus(u, params), (0,), F) @ dressed_k_minus(u, params), 0)


# -- reflection algebra -----------------------------------------------------

def reflection_residual(Ku, Kv, u, v, eta, factors=None) -> float:
    """``R12(u-v) K1(u) R21(u+v) K2(v) - K2(v) R12(u+v) K1(u) R21(u-v)``.

    ``Ku``/``Kv`` act on an auxiliary factor followed by optional spectator
    factors (the quantum space of a dressed representation).
    """
    spect = list(Ku.rows[1:])
    F = [BF, BF] + spect
    q = tuple(range(2, 2 + len(spect)))
    R12 = lambda x: embed(r_matrix(x, eta), (0, 1), F)
    R21 = lambda x: embed(r_matrix(x, eta), (1, 0), F)
    K1 = embed(Ku, (0,) + q, F)
    K2 = embed(Kv, (1,) + q, F)
    lhs = R12(u - v) @ K1 @ R21(u + v) @ K2
    rhs = K2 @ R12(u + v) @ K1 @ R21(u - v)
    return (lhs - rhs).norm()


def dual_reflection_residual(params: ModelParams, u, v) -> float:
    """``Rbar12(v-u) K1^{st1} R21(-u-v-4eta) K2^{ist2} = K2^{ist2} R12(-u-v-4eta) K1^{st1} Rbar21(v-u)``."""
    e = params.eta
    F = [BF, BF]
    K1 = partial_super_transpose(embed(k_plus(u, params), (0,), F), 0)
    K2 = partial_super_transpose(embed(k_plus(v, params), (1,), F), 1, "ist")
    Rb = conjugated_r(v - u, e)
    R = r_matrix(-u - v - 4 * e, e)
    lhs = Rb @ K1 @ r21(R) @ K2
    rhs = K2 @ R @ K1 @ r21(Rb)
    return (lhs - rhs).norm()


def check_reflection(params: ModelParams, n_samples: int = 50, seed: int = 0, tol: float = 1e-12,
                     dressed_sizes=(1, 2), n_dressed: int = 10) -> VerificationReport:
    rng = np.random.default_rng(seed)
    e = params.eta
    rep = VerificationReport("reflection", "graded reflection and dual reflection equations",
                             params=params.to_dict())
    re, dre = [], []
    for _ in range(n_samples):
        u, v = rng.normal(size=2) * 0.7 + 1j * rng.normal(size=2) * 0.2
        re.append(reflection_residual(k_minus(u, params), k_minus(v, params), u, v, e))
        dre.append(dual_reflection_residual(params, u, v))
    rep.add("reflection K-", re, tol)
    rep.add("dual reflection K+", dre, tol)
    for N in dressed_sizes:
        p = params.with_(N=N)
        res = []
        for _ in range(n_dressed):
            u, v = rng.normal(size=2) * 0.7 + 1j * rng.normal(size=2) * 0.2
            res.append(reflection_residual(dressed_k_minus(u, p), dressed_k_minus(v, p), u, v, e))
        rep.add(f"reflection dressed T K- That (N={N})", res, tol)
    return rep


def check_conjugated_r(eta, n_samples: int = 10, seed: int = 0, tol: float = 1e-12) -> VerificationReport:
    """Compare ``sigma^z``-conjugation with the double super transposition forms."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport("conjugated-r", "conjugated R-matrix as crossing-matrix conjugation",
                             params={"eta": _cpair(eta)})
    st = partial_super_transpose
    forms = {
        "R21^{st1 ist2}": lambda R: st(st(r21(R), 0), 1, "ist"),
        "R21^{ist1 st2}": lambda R: st(st(r21(R), 0, "ist"), 1),
        "R^{st1 st1}": lambda R: st(st(R, 0), 0),
        "R^{ist1 ist1}": lambda R: st(st(R, 0, "ist"), 0, "ist"),
        "R^{st2 st2}": lambda R: st(st(R, 1), 1),
        "R^{ist2 ist2}": lambda R: st(st(R, 1, "ist"), 1, "ist"),
    }
    res = {k: [] for k in forms}
    sz2 = embed(local_operator("sz"), (1,), (BF, BF))
    alt = []
    for _ in range(n_samples):
        u = complex(rng.normal() + 0.3j * rng.normal())
        R, Rb = r_matrix(u, eta), conjugated_r(u, eta)
        alt.append((sz2 @ R @ sz2 - Rb).norm())
        for k, f in forms.items():
            res[k].append((f(R) - Rb).norm())
    rep.add("sz_1 R sz_1 = sz_2 R sz_2", alt, tol)
    for k, v in res.items():
        rep.add(f"Rbar = {k}", v, tol)
    return rep


# -- open transfer matrix properties ------------------------------------------

def semiclassical_tau(u, params: ModelParams) -> GradedMatrix:
    """The ``eta -> 0`` limit of ``tau(u)`` (for ``u`` away from 0) in closed form,

    ``(-1)^N / (sin psi_- sin psi_+) * ([cos^2 u sin psi_- sin psi_+
    + sin^2 u cos psi_- cos psi_+] 1 - 2 sin^2 u cos^2 u X sigma^z_(N))``

    with ``X = beta_+ alpha_- - alpha_+ beta_-`` and ``sigma^z_(N)`` the product
    over all sites.  At ``N = 0`` this is ``str(K^+ K^-)`` evaluated by hand.
    """
    N = params.N
    pm, pp = params.psi_minus_body, params.psi_plus_body
    sm, sp = np.sin(pm), np.sin(pp)
    offd = params.odd_invariant * (2 * np.sin(u) ** 2 * np.cos(u) ** 2)
    diag = np.cos(u) ** 2 * sm * sp + np.sin(u) ** 2 * np.cos(pm) * np.cos(pp)
    I = GradedMatrix.identity([BF] * N)
    return (I * diag - offd * sigma_z_string(N)) * ((-1) ** N / (sm * sp))


def check_obc_properties(params: ModelParams, n_samples: int = 5, seed: int = 0, tol: float = 1e-12,
                         semiclassical_eta: float = 1e-4, asymptotics: bool = True) -> VerificationReport:
    """Normalisation, periodicity, crossing, commutativity, evenness,
    semiclassical limit and large-``z`` asymptotics of the open ``tau``."""
    rng = np.random.default_rng(seed)
    N, e = params.N, params.eta
    I = GradedMatrix.identity([BF] * N)
    rep = VerificationReport("properties-obc", "open super transfer matrix properties",
                             params=params.to_dict())
    rep.add("tau(0) = 1", (transfer_obc(0.0, params) - I).norm(), tol)
    per, cross, comm, even = [], [], [], []
    for _ in range(n_samples):
        u, v = rng.normal(size=2) * 0.6 + 1j * rng.normal(size=2) * 0.2
        tu = transfer_obc(u, params)
        per.append((transfer_obc(u + np.pi, params) - tu).norm())
        w = -u - 2 * e
        cross.append((tu * zeta(u, e) ** N - transfer_obc(w, params) * zeta(w, e) ** N).norm())
        comm.append(tu.commutator(transfer_obc(v, params)).norm())
        even.append(tu.even_operator_defect())
    rep.add("pi-periodicity", per, tol)
    rep.add("crossing", cross, 10 * tol)
    rep.add("commuting family", comm, 10 * tol)
    rep.add("even supermatrix (odd souls only on parity-changing entries)", even, tol)

    # linear approach to eta = 0: extrapolate from eta and 2 eta
    sc = []
    for _ in range(3):
        u = complex(rng.normal() * 0.6 + 0.2j * rng.normal())
        t1 = transfer_obc(u, params.with_(eta=semiclassical_eta))
        t2 = transfer_obc(u, params.with_(eta=2 * semiclassical_eta))
        lim = t1 * 2.0 - t2
        ref = semiclassical_tau(u, params)
        sc.append((lim - ref).norm() / max(1.0, ref.norm()))
    rep.add("semiclassical limit (extrapolated)", sc, 1e-3)

    if asymptotics:
        from .spectrum import obc_operator_asymptotics
        lead, pred, deg = obc_operator_asymptotics(params)
        rep.add(f"asymptotic z^{deg} operator coefficient", (lead - pred).norm(), 1e-9)
    return rep


def predicted_obc_asymptotic_operator(params: ModelParams) -> tuple[int, GradedMatrix]:
    """Leading large-``z`` coefficient of ``tau(u)`` as a quantum-space operator."""
    N, e = params.N, params.eta
    wpm = params.omega_plus * params.omega_minus
    n = lambda j: site_operator("n", j, N)
    nb = lambda j: site_operator("nbar", j, N)
    E = np.exp(2j * e)
    if not params.is_diagonal:
        op = GradedMatrix.identity([BF] * N)
        for j in range(1, N + 1):
            op = op @ (nb(j) - E * n(j)) @ (n(j) + E * nb(j))
        coeff = params.odd_invariant * ((-1) ** N * np.exp(4j * e) / 4)
        return 4, (wpm * coeff) * op
    a = GradedMatrix.identity([BF] * N)
    b = GradedMatrix.identity([BF] * N)
    for j in range(1, N + 1):
        a = a @ (n(j) + E * nb(j)) @ (n(j) + E * nb(j))
        b = b @ (nb(j) - E * n(j)) @ (nb(j) - E * n(j))
    s = params.psi_plus + params.psi_minus
    pref = wpm * (-(-1) ** N * np.exp(2j * e) / 4)
    return 2, (pref * gr_exp(1j * s)) * a + (pref * gr_exp(-1j * s)) * b


def gr_exp(x):
    if isinstance(x, GrassmannNumber):
        b = np.exp(x.body)
        return gr.taylor(x, [b] * 5)
    return np.exp(x)


# -- Hamiltonian --------------------------------------------------------------

def hamiltonian_obc(params: ModelParams) -> GradedMatrix:
    """Open Hamiltonian normalised so that ``d tau/du |_0 = 2 H + const``.

    ``H = -(1/sin 2eta) sum_j H_{j,j+1} + (1/2) cot(psi_-) (nbar_1 - n_1)
    + N_+ nbar_N - N_- n_N + csc(psi_-) (alpha_- c_1 + beta_- c^dag_1)
    + csc(psi_+) (alpha_+ c_N + beta_+ c^dag_N)`` with
    ``N_pm = sin(2eta +- psi_+) / (2 sin 2eta sin psi_+)`` and the bulk
    density ``H_{j,j+1} = -(c^dag_{j+1} c_j + c^dag_j c_{j+1})
    + V (n_{j+1} n_j + nbar_{j+1} nbar_j)``, ``V = -cos 2eta``.
    """
    N, e = params.N, params.eta
    s, V = np.sin(2 * e), -np.cos(2 * e)
    op = lambda name, j: site_operator(name, j, N)
    bulk = GradedMatrix.zeros([BF] * N)
    for j in range(1, N):
        bulk = bulk - (op("cdag", j + 1) @ op("c", j) + op("cdag", j) @ op("c", j + 1))
        bulk = bulk + V * (op("n", j + 1) @ op("n", j) + op("nbar", j + 1) @ op("nbar", j))
    pm, pp = params.psi_minus, params.psi_plus
    csc_m = 1.0 / gr.sin(pm)
    csc_p = 1.0 / gr.sin(pp)
    cot_m = gr.cos(pm) * csc_m
    Np = gr.sin(2 * e + pp) * csc_p * (0.5 / s)
    Nm = gr.sin(2 * e - pp) * csc_p * (0.5 / s)
    H = bulk * (-1.0 / s)
    H = H + (cot_m * 0.5) * (op("nbar", 1) - op("n", 1))
    H = H + Np * op("nbar", N) - Nm * op("n", N)
    H = H + (params.alpha_m * csc_m) * op("c", 1) + (params.beta_m * csc_m) * op("cdag", 1)
    H = H + (params.alpha_p * csc_p) * op("c", N) + (params.beta_p * csc_p) * op("cdag", N)
    return H


def check_hamiltonian_obc(params: ModelParams, h: float = 1e-4, tol: float = 1e-7) -> VerificationReport:
    """``d tau/du|_0 - 2H`` must be a multiple of the identity."""
    rep = VerificationReport("hamiltonian-obc", "open Hamiltonian from the transfer-matrix derivative",
                             params=params.to_dict())
    D = derivative(lambda u: transfer_obc(u, params), 0.0, h)
    X = D - hamiltonian_obc(params) * 2.0
    dim = X.shape[0]
    const = X.data[:, range(dim), range(dim)].mean(axis=1)
    resid = X - GradedMatrix.identity(X.rows) * GrassmannNumber(const)
    rep.add("d tau(0) = 2 H + const", resid.norm(), tol)
    rep.add("Grassmann boundary terms", resid.soul().norm(), tol)
    return rep


# -- super quantum determinant --------------------------------------------------

def _det_diag(K: GradedMatrix):
    # alpha beta = 0 in the quotient, so only the diagonal contributes
    return K.entry(0, 0) * K.entry(1, 1)


def delta_k_minus(u, params: ModelParams) -> GrassmannNumber:
    """``g(2u + 2eta) det K^-(u + 2eta)``."""
    return _det_diag(k_minus(u + 2 * params.eta, params)) * g(2 * u + 2 * params.eta, params.eta)


def delta_k_plus(u, params: ModelParams) -> GrassmannNumber:
    """``g(-2u - 6eta) det K^+(u)``."""
    return _det_diag(k_plus(u, params)) * g(-2 * u - 6 * params.eta, params.eta)


def delta_k_minus_defining(u, params: ModelParams) -> GrassmannNumber:
    """``str_12 { P^- K^-_1(u) R_21(2u + 2eta) K^-_2(u + 2eta) }``."""
    e, F = params.eta, [BF, BF]
    X = (projector_minus(e) @ embed(k_minus(u, params), (0,), F)
         @ r21(r_matrix(2 * u + 2 * e, e)) @ embed(k_minus(u + 2 * e, params), (1,), F))
    return super_trace(X)


def delta_k_plus_defining(u, params: ModelParams) -> GrassmannNumber:
    """``str_12 { P^- K^+_2(u + 2eta) Rbar_12(-2u - 6eta) K^+_1(u) }``."""
    e, F = params.eta, [BF, BF]
    X = (projector_minus(e) @ embed(k_plus(u + 2 * e, params), (1,), F)
         @ conjugated_r(-2 * u - 6 * e, e) @ embed(k_plus(u, params), (0,), F))
    return super_trace(X)


def sqd_obc(u, params: ModelParams) -> GrassmannNumber:
    """Closed form ``Delta(u) = (zeta(u+2eta)/zeta(u))^N delta{K^+}(u) delta{K^-}(u)``."""
    e, N = params.eta, params.N
    return delta_k_plus(u, params) * delta_k_minus(u, params) * ((zeta(u + 2 * e, e) / zeta(u, e)) ** N)


def sqd_obc_defining(u, params: ModelParams) -> GradedMatrix:
    """Supertrace over both auxiliary spaces of
    ``P^- K^+_2(u+2eta) Rbar_12(-2u-6eta) K^+_1(u) Tm_1(u) R_12(2u+2eta) Tm_2(u+2eta)``
    with ``Tm = T K^- That``.  Equals ``-Delta(u)`` times the identity."""
    e, N = params.eta, params.N
    F = [BF, BF] + [BF] * N
    q = tuple(range(2, N + 2))
    X = (embed(projector_minus(e), (0, 1), F)
         @ embed(k_plus(u + 2 * e, params), (1,), F)
         @ embed(conjugated_r(-2 * u - 6 * e, e), (0, 1), F)
         @ embed(k_plus(u, params), (0,), F)
         @ embed(dressed_k_minus(u, params), (0,) + q, F)
         @ embed(r_matrix(2 * u + 2 * e, e), (0, 1), F)
         @ embed(dressed_k_minus(u + 2 * e, params), (1,) + q, F))
    return partial_super_trace(X, (0, 1))


def check_sqd_obc(params: ModelParams, n_samples: int = 5, seed: int = 0, tol: float = 1e-12,
                  defining_max_N: int = 2) -> VerificationReport:
    rng = np.random.default_rng(seed)
    rep = VerificationReport("qdet-obc", "open super quantum determinant factorisation",
                             params=params.to_dict())
    dk_m, dk_p, defin, diag_inv, soul = [], [], [], [], []
    diag = params.diagonal_part()
    for _ in range(n_samples):
        u = complex(rng.normal() * 0.6 + 0.2j * rng.normal())
        dk_m.append((delta_k_minus_defining(u, params) - delta_k_minus(u, params)).norm())
        dk_p.append((delta_k_plus_defining(u, params) - delta_k_plus(u, params)).norm())
        D = sqd_obc(u, params)
        diag_inv.append((D - sqd_obc(u, diag)).norm())
        soul.append(D.soul.norm())
        if params.N <= defining_max_N:
            X = sqd_obc_defining(u, params)
            scale = max(1.0, abs(D.body))
            defin.append((X + GradedMatrix.identity(X.rows) * D).norm() / scale)
    rep.add("delta{K-} = g(2u+2eta) det K-(u+2eta)", dk_m, tol)
    rep.add("delta{K+} = g(-2u-6eta) det K+(u)", dk_p, tol)
    rep.add("Delta independent of odd boundary parameters", diag_inv, tol)
    rep.add("Delta has no soul", soul, tol)
    if defin:
        rep.add("defining supertrace = -Delta 1", defin, tol,
                note="the antisymmetric projector picks an overall sign relative to the factorised form")
    return rep


def check_commuting(params: ModelParams, n_pairs: int = 20, seed: int = 0, tol: float = 1e-11,
                    scale: float = 0.6, imag: float = 0.2) -> VerificationReport:
    """``[tau(u), tau(v)] = 0`` at random pairs, periodic or open.

    The residual is ``|[tau(u), tau(v)]| / (|tau(u)| |tau(v)|)``: the open
    transfer matrix has poles at ``u = +-2 eta`` and near them the absolute
    commutator grows with ``|tau|`` while the relative one stays at
    roundoff.  The absolute value is listed as an untoleranced entry.  For
    number-conserving chains particle-number conservation is reported too.
    """
    from .bulk import number_sectors, transfer_pbc
    rng = np.random.default_rng(seed)
    N, e = params.N, params.eta
    tau = (lambda u: transfer_obc(u, params)) if params.is_open else (lambda u: transfer_pbc(u, N, e))
    rep = VerificationReport("commuting", "commuting family of transfer matrices", params=params.to_dict())
    comm, num, mags = [], [], []
    Nq = number_sectors(N)
    for _ in range(n_pairs):
        u, v = rng.normal(size=2) * scale + 1j * imag * rng.normal(size=2)
        tu, tv = tau(u), tau(v)
        c = tu.commutator(tv).norm()
        comm.append(c / max(1.0, tu.norm() * tv.norm()))
        mags.append(c)
        num.append(np.abs(tu.data * (Nq[:, None] != Nq[None, :])[None]).max(initial=0.0))
    rep.add("[tau(u), tau(v)] relative", comm, tol)
    rep.add("[tau(u), tau(v)] absolute", mags, None)
    if params.is_diagonal:
        rep.add("particle number conserved", num, tol)
    return rep
