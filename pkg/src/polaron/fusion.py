"""Auxiliary-space fusion and truncation at roots of unity.

Fused objects are built from ``n`` copies of the auxiliary space with the
(ungraded) symmetriser ``P^+`` and then reduced to the ``n+1`` dimensional
symmetric block by the transformation matrices ``A_(1..n)``.  The reduced
auxiliary space has alternating grading ``B F B F ...``.

Level conventions:

* periodic ``tau^(n)`` uses ``n + 1`` copies, ``tau^(0)`` is the ordinary
  transfer matrix and ``tau^(-1) = 1``;
* open ``tau^(n)`` uses ``n`` copies, ``tau^(1)`` is the ordinary open transfer
  matrix and ``tau^(0) = 1``.

The ``A`` matrices for ``n <= 4`` are shipped as exact entries in
``data/fusion_basis.json``; ``n = 5`` is built from the weight vectors of the
symmetriser image and a null-space completion.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.linalg import null_space

from . import grassmann as gr
from .boundary import delta_k_minus, delta_k_plus, sqd_obc, transfer_obc
from .bulk import (BF, ModelParams, _cpair, conjugated_r, monodromy_from_local, projector_minus,
                   r_matrix, sqd_pbc, transfer_pbc, zeta)
from .graded import GradedMatrix, embed, flat_parity, local_operator, partial_super_trace, sigma_z_string
from .grassmann import GrassmannNumber
from .report import VerificationReport

MAX_LEVEL = 5
LEAK_TOL = 1e-10


class BasisValidationFailed(RuntimeError):
    pass


class BlockLeakage(RuntimeError):
    """The complement block of an ``A``-conjugated fused object does not vanish."""


# -- projectors and transformation matrices -----------------------------------

def eta_root(p: int) -> float:
    """``eta_p = (pi/2) / (p + 1)``."""
    return (np.pi / 2) / (p + 1)


def q_integer(n: int, eta) -> complex:
    """``[n]_q = (q^n - q^-n) / (q - q^-1)`` with ``q = exp(2 i eta)``."""
    q = np.exp(2j * eta)
    return (q ** n - q ** -n) / (q - 1 / q)


def a_coefficient(n: int) -> float:
    """``sqrt(2n/(n+1)) [n]_q^{-1/2}`` at ``eta = eta_n``."""
    return float(np.real(np.sqrt(2 * n / (n + 1)) * q_integer(n, eta_root(n)) ** -0.5))


# The centre entry of the level-4 B and C matrices.  It has to reproduce the
# outer entries of B_<<12>> relative to its centre, which fixes 1/sqrt(2)
# once the A matrices have orthonormal symmetric rows.
B_CENTRE = 1 / np.sqrt(2)


def fused_signature(n: int) -> tuple[int, ...]:
    """Parities of the reduced ``n``-copy auxiliary space: ``(0, 1, 0, ...)``."""
    return tuple(k % 2 for k in range(n + 1))


@lru_cache(maxsize=None)
def _symmetriser(n: int) -> np.ndarray:
    d = 2 ** n
    P = np.zeros((d, d))
    for perm in itertools.permutations(range(n)):
        for k in range(d):
            bits = [(k >> (n - 1 - i)) & 1 for i in range(n)]
            kk = sum(bits[perm[i]] << (n - 1 - i) for i in range(n))
            P[kk, k] += 1
    return P / math.factorial(n)


def projector_plus(n: int) -> GradedMatrix:
    """Symmetriser ``P^+ = (1/n!) sum_sigma P_sigma`` over ``n`` copies of ``BF``.

    The permutations act on basis labels without grading signs.
    """
    if not 1 <= n <= MAX_LEVEL:
        raise ValueError(f"fusion level {n} outside 1..{MAX_LEVEL}")
    return GradedMatrix(_symmetriser(n).astype(complex), [BF] * n)


def projector_pm_pair(eta) -> tuple[GradedMatrix, GradedMatrix]:
    """``(P^+, P^-)`` on two copies, with ``P^- = -R(-2 eta)/2``."""
    return projector_plus(2), projector_minus(eta)


def triangularity_residual(u, eta) -> float:
    """``|| P^-_12 R_13(u) R_23(u + 2eta) P^+_12 ||``."""
    F = [BF] * 3
    Pp, Pm = projector_pm_pair(eta)
    X = (embed(Pm, (0, 1), F) @ embed(r_matrix(u, eta), (0, 2), F)
         @ embed(r_matrix(u + 2 * eta, eta), (1, 2), F) @ embed(Pp, (0, 1), F))
    return X.norm()


def _weight_basis(n: int) -> np.ndarray:
    """Normalised symmetric weight vectors followed by an orthonormal complement."""
    d = 2 ** n
    w = np.array([bin(k).count("1") for k in range(d)])
    S = np.array([(w == m) / np.sqrt(np.count_nonzero(w == m)) for m in range(n + 1)], dtype=float)
    return np.vstack([S, null_space(S).T])


def _read_asset() -> dict:
    text = resources.files("polaron").joinpath("data/fusion_basis.json").read_text()
    doc = json.loads(text)
    canon = json.dumps(doc["matrices"], sort_keys=True, separators=(",", ":"))
    if hashlib.sha256(canon.encode()).hexdigest() != doc["sha256"]:
        raise BasisValidationFailed("fusion basis asset checksum mismatch")
    return doc


@lru_cache(maxsize=1)
def _asset_matrices() -> dict[int, np.ndarray]:
    out = {}
    for key, m in _read_asset()["matrices"].items():
        A = np.zeros((m["dim"], m["dim"]))
        for i, j, num, den, rad in m["entries"]:
            A[i, j] = num / den * np.sqrt(rad)
        out[int(key)] = A
    return out


@dataclass(frozen=True)
class FusionBasis:
    """Transformation data of fusion level ``n``.

    ``B`` and ``C`` are the diagonals of the truncation transformations; they
    are only defined for the printed levels ``n <= 4``.
    """

    n: int
    A: np.ndarray
    A_inv: np.ndarray
    B: np.ndarray | None
    C: np.ndarray | None
    signature: tuple[int, ...]
    source: str

    @property
    def dim(self) -> int:
        return self.n + 1

    def block_leakage(self, X: np.ndarray, extra: int = 1) -> tuple[np.ndarray, float]:
        """Conjugate ``X`` (``data[m]`` stack or single matrix) by ``A (x) 1_extra``
        and split into the kept block and the norm of everything else."""
        A = np.kron(self.A, np.eye(extra))
        Ai = np.kron(self.A_inv, np.eye(extra))
        Y = A @ X @ Ai
        k = self.dim * extra
        leak = max(np.abs(Y[..., k:, :]).max(initial=0.0), np.abs(Y[..., :, k:]).max(initial=0.0))
        return Y[..., :k, :k], float(leak)


def _diagonals(n: int):
    if n == 1:
        return np.ones(2), np.ones(2)
    if n > 4:
        return None, None
    a = a_coefficient(n)
    mid = np.ones(n - 1)
    if n == 4:
        mid[1] = B_CENTRE
    return np.concatenate([[a], mid, [a]]), np.concatenate([[a], mid, [1.0]])


@lru_cache(maxsize=None)
def load_fusion_basis(n: int) -> FusionBasis:
    """Load (``n <= 4``) or construct (``n = 5``) and validate the level-``n`` basis.

    Validation requires ``A P^+ A^-1`` to be the identity on the leading
    ``n+1`` states and zero elsewhere.

    Raises
    ------
    BasisValidationFailed
    """
    if not 1 <= n <= MAX_LEVEL:
        raise ValueError(f"fusion level {n} outside 1..{MAX_LEVEL}")
    if n == 1:
        A, source = np.eye(2), "identity"
    elif n in _asset_matrices():
        A, source = _asset_matrices()[n], "asset"
    else:
        A, source = _weight_basis(n), "constructed"
    Ai = np.linalg.inv(A)
    B, C = _diagonals(n)
    basis = FusionBasis(n, A, Ai, B, C, fused_signature(n), source)
    if n > 1:
        Y, leak = basis.block_leakage(_symmetriser(n))
        if leak > 1e-12 or np.abs(Y - np.eye(n + 1)).max() > 1e-12:
            raise BasisValidationFailed(f"A_{n} does not block-diagonalise the symmetriser")
    return basis


def fused_sigma_z(n: int) -> GradedMatrix:
    """Leading block of ``A sigma^z_(n) A^-1``, ``sigma^z_(n)`` the product over copies."""
    basis = load_fusion_basis(n)
    sz = np.diag(np.where(flat_parity([BF] * n), -1.0, 1.0))
    Y, _ = basis.block_leakage(sz)
    return GradedMatrix(Y.astype(complex), [basis.signature])


def _reduce(X: GradedMatrix, n: int, extra_rows, what: str, tol: float = LEAK_TOL) -> GradedMatrix:
    basis = load_fusion_basis(n)
    extra = int(np.prod([len(f) for f in extra_rows])) if extra_rows else 1
    Y, leak = basis.block_leakage(X.data, extra)
    if leak > tol * max(1.0, np.abs(Y).max()):
        raise BlockLeakage(f"{what}: complement block norm {leak:.2e}")
    return GradedMatrix(Y, [basis.signature] + list(extra_rows), algebra=X.algebra)


def leakage(X: GradedMatrix, n: int, extra: int = 1) -> float:
    return load_fusion_basis(n).block_leakage(X.data, extra)[1]


# -- fused R-matrices and periodic transfer matrices --------------------------

def fused_r_full(n: int, u, eta) -> GradedMatrix:
    """``P^+ R_{1q}(u) R_{2q}(u + 2eta) ... R_{nq}(u + [n-1] 2eta) P^+`` on
    ``n`` auxiliary copies followed by one quantum site."""
    F = [BF] * (n + 1)
    X = GradedMatrix.identity(F)
    for k in range(n):
        X = X @ embed(r_matrix(u + 2 * k * eta, eta), (k, n), F)
    P = embed(projector_plus(n), tuple(range(n)), F)
    return P @ X @ P


def fused_r(n: int, u, eta) -> GradedMatrix:
    """Reduced fused R-matrix on ``<<1..n>> (x) BF``.  ``n = 0`` gives the
    identity on a one-dimensional auxiliary space.

    Raises
    ------
    BlockLeakage
    """
    if n == 0:
        return GradedMatrix.identity([(0,), BF])
    if n == 1:
        return r_matrix(u, eta)
    return _reduce(fused_r_full(n, u, eta), n, [BF], f"fused R (n={n})")


def fused_monodromy_pbc(n: int, u, N: int, eta) -> GradedMatrix:
    """``R_<<1..n>>q_N(u) ... R_<<1..n>>q_1(u)``."""
    return monodromy_from_local(fused_r(n, u, eta), N)


def fused_transfer_pbc(n: int, u, N: int, eta) -> GradedMatrix:
    """Periodic ``tau^(n)(u)`` from ``n + 1`` auxiliary copies (``tau^(-1) = 1``)."""
    if n < -1:
        raise ValueError("periodic fusion levels start at -1")
    if n == -1:
        return GradedMatrix.identity([BF] * N)
    if n == 0:
        return transfer_pbc(u, N, eta)
    return partial_super_trace(fused_monodromy_pbc(n + 1, u, N, eta), 0)


def _samples(rng, k, scale=0.6, imag=0.25):
    return [complex(rng.normal() * scale + 1j * imag * rng.normal()) for _ in range(k)]


def check_fused_r(eta, levels=(2, 3, 4), n_samples: int = 5, seed: int = 0,
                  tol: float = 1e-11) -> VerificationReport:
    """Leakage, fused Yang-Baxter equation, fused periodicity and projector algebra."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport("fused-r", "fused R-matrices and projector algebra", params={"eta": _cpair(eta)})
    Pp, Pm = projector_pm_pair(eta)
    I4 = GradedMatrix.identity([BF, BF])
    rep.add("P+ idempotent", (Pp @ Pp - Pp).norm(), 1e-12)
    rep.add("P- idempotent", (Pm @ Pm - Pm).norm(), 1e-12)
    rep.add("P+ P- = 0", (Pp @ Pm).norm(), 1e-12)
    rep.add("P+ + P- = 1", (Pp + Pm - I4).norm(), 1e-12)
    rep.add("P+ differs from R(2eta)/2", [(Pp - r_matrix(2 * eta, eta) * 0.5).norm()], None,
            note="nonzero by construction")
    rep.add("triangularity P- R13 R23 P+", [triangularity_residual(u, eta) for u in _samples(rng, 30)], 1e-12)
    for n in levels:
        leak, ybe, per = [], [], []
        sz = fused_sigma_z(n)
        szq = embed(sz, (0,), [sz.rows[0], BF])
        for u, v in zip(_samples(rng, n_samples), _samples(rng, n_samples)):
            leak.append(leakage(fused_r_full(n, u, eta), n, 2))
            if n <= 3:
                F = [fused_signature(n), BF, BF]
                a = embed(fused_r(n, u - v, eta), (0, 1), F)
                b = embed(fused_r(n, u, eta), (0, 2), F)
                c = embed(r_matrix(v, eta), (1, 2), F)
                ybe.append((a @ b @ c - c @ b @ a).norm())
            R0, R1 = fused_r(n, u, eta), fused_r(n, u + np.pi, eta)
            per.append((R1 - (szq @ R0 @ szq) * (-1) ** n).norm())
        rep.add(f"complement block (n={n})", leak, 1e-12)
        if ybe:
            rep.add(f"fused YBE (n={n})", ybe, tol)
        rep.add(f"fused periodicity (n={n})", per, tol)
    return rep


def check_hierarchy_pbc(N: int, eta, levels=(0, 1, 2, 3), n_samples: int = 3, seed: int = 0,
                        tol: float = 1e-10) -> VerificationReport:
    """``tau^(n)(u) tau(u + [n+1] 2eta) = tau^(n+1)(u) + delta(u + n 2eta) tau^(n-1)(u)``."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport("hierarchy-pbc", "periodic fusion hierarchy with operator-valued quantum determinant",
                             params={"N": N, "eta": _cpair(eta)})
    tops = max(levels) + 1
    for n in levels:
        res = []
        for u in _samples(rng, n_samples):
            lhs = fused_transfer_pbc(n, u, N, eta) @ transfer_pbc(u + (n + 1) * 2 * eta, N, eta)
            rhs = fused_transfer_pbc(n + 1, u, N, eta) + sqd_pbc(u + n * 2 * eta, N, eta) @ fused_transfer_pbc(n - 1, u, N, eta)
            res.append((lhs - rhs).norm() / max(1.0, lhs.norm()))
        rep.add(f"hierarchy n={n}", res, tol)
    comm = []
    u, v = _samples(rng, 2)
    taus = {m: fused_transfer_pbc(m, u, N, eta) for m in range(tops + 1)}
    taus_v = {m: fused_transfer_pbc(m, v, N, eta) for m in range(tops + 1)}
    for a in taus:
        for b in taus_v:
            X, Y = taus[a], taus_v[b]
            comm.append(X.commutator(Y).norm() / max(1.0, X.norm() * Y.norm()))
    rep.add("levels commute", comm, tol)
    # the quantum determinant acts as -(-1)^(N+M) zeta^N(u + 2eta) on M-particle states
    u = _samples(rng, 1)[0]
    M = np.array([bin(k).count("1") for k in range(2 ** N)])
    want = -((-1.0) ** (N + M)) * zeta(u + 2 * eta, eta) ** N
    rep.add("quantum determinant sector signs", np.abs(sqd_pbc(u, N, eta).body - np.diag(want)).max(), 1e-12)
    return rep


# -- fused boundary matrices -----------------------------------------------------

def fused_k_full(n: int, u, params: ModelParams, side: str = "minus", reverse: bool = False) -> GradedMatrix:
    """Unreduced fused ``K^-`` or ``K^+`` on ``n`` auxiliary copies.

    ``K^-_(1..n)(u) = P^+ [prod_i K^-_i(u + [i-1] 2eta) Rstring_i(u)] K^-_n(u + [n-1] 2eta) P^+``
    with ``Rstring_i(u) = prod_k R_{k,i+1}(2u + [i+k-1] 2eta)``; ``K^+`` uses
    the mirrored product with conjugated R-matrices.  ``reverse`` relabels the
    copies ``i -> n + 1 - i`` (``K^-`` only).
    """
    from .boundary import k_minus, k_plus
    e = params.eta
    F = [BF] * n
    X = GradedMatrix.identity(F)
    if side == "minus":
        pos = (lambda i: n - i) if reverse else (lambda i: i - 1)
        for i in range(1, n):
            X = X @ embed(k_minus(u + (i - 1) * 2 * e, params), (pos(i),), F)
            for k in range(1, i + 1):
                X = X @ embed(r_matrix(2 * u + (i + k - 1) * 2 * e, e), (pos(k), pos(i + 1)), F)
        X = X @ embed(k_minus(u + (n - 1) * 2 * e, params), (pos(n),), F)
    elif side == "plus":
        if reverse:
            raise ValueError("reverse ordering is only defined for K^-")
        for i in range(1, n):
            X = X @ embed(k_plus(u + (n - i) * 2 * e, params), (n - i,), F)
            for k in range(1, i + 1):
                Rb = conjugated_r(-2 * u + (i + k - 1 - 2 * n) * 2 * e, e)
                X = X @ embed(Rb, (n - k, n - i - 1), F)
        X = X @ embed(k_plus(u, params), (0,), F)
    else:
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    P = projector_plus(n)
    return P @ X @ P


def fused_k(n: int, u, params: ModelParams, side: str = "minus") -> GradedMatrix:
    """Reduced ``(n+1) x (n+1)`` fused boundary matrix (``n = 0``: the 1x1 identity)."""
    from .boundary import k_minus, k_plus
    if n == 0:
        return GradedMatrix.identity([(0,)])
    if n == 1:
        return k_minus(u, params) if side == "minus" else k_plus(u, params)
    return _reduce(fused_k_full(n, u, params, side), n, [], f"fused K ({side}, n={n})")


def fused_k_plus_from_minus(n: int, u, params: ModelParams) -> GradedMatrix:
    """Unreduced ``K^+`` from the mirrored ``K^-`` of the dual parameters,
    ``(2 cos 2eta)^-n K^-_(n..1)(-u - n 2eta) sigma^z_(n)``."""
    from .boundary import dual_params
    F = [BF] * n
    Km_rev = fused_k_full(n, -u - n * 2 * params.eta, dual_params(params), "minus", reverse=True)
    sz = GradedMatrix(np.diag(np.where(flat_parity(F), -1.0, 1.0)).astype(complex), F)
    return (Km_rev @ sz) * (1 / (2 * np.cos(2 * params.eta)) ** n)


def check_fused_k(params: ModelParams, levels=(2, 3, 4), n_samples: int = 3, seed: int = 0,
                  tol: float = 1e-12) -> VerificationReport:
    """Block leakage, periodicity and the ``K^+``/``K^-`` mirror relation."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport("fused-k", "fused boundary matrices", params=params.to_dict())
    for n in levels:
        leak, per, mirror = [], [], []
        sz_full = GradedMatrix(np.diag(np.where(flat_parity([BF] * n), -1.0, 1.0)).astype(complex), [BF] * n)
        sz = fused_sigma_z(n)
        for u in _samples(rng, n_samples):
            for side in ("minus", "plus"):
                Kf = fused_k_full(n, u, params, side)
                leak.append(leakage(Kf, n))
                Kf_pi = fused_k_full(n, u + np.pi, params, side)
                per.append((Kf_pi - (sz_full @ Kf @ sz_full) * (-1) ** n).norm())
                K, K_pi = fused_k(n, u, params, side), fused_k(n, u + np.pi, params, side)
                per.append((K_pi - (sz @ K @ sz) * (-1) ** n).norm())
            if abs(np.cos(2 * params.eta)) > 1e-8:
                scale = max(1.0, fused_k_full(n, u, params, "plus").norm())
                mirror.append((fused_k_full(n, u, params, "plus") - fused_k_plus_from_minus(n, u, params)).norm() / scale)
        rep.add(f"complement block (n={n})", leak, tol)
        rep.add(f"fused K periodicity (n={n})", per, 10 * tol)
        if mirror:
            rep.add(f"K+ mirrors dual K- (n={n})", mirror, 10 * tol)
    return rep


# -- open fused transfer matrices ------------------------------------------------

def fused_transfer_obc(n: int, u, params: ModelParams) -> GradedMatrix:
    """``str K^+_<<n>>(u) T_<<n>>(u) K^-_<<n>>(u) That_<<n>>(u + [n-1] 2eta)``.

    ``That_<<n>>(u + [n-1] 2eta) = R_<<n>>q_1(u) ... R_<<n>>q_N(u) / prod_k zeta^N(u + k 2eta)``.
    Level 0 is the identity.  This is the literal supertrace; the rescaled
    hierarchy is written for :func:`tau_tilde`.
    """
    N, e = params.N, params.eta
    if n == 0:
        return GradedMatrix.identity([BF] * N)
    if n == 1:
        return transfer_obc(u, params)
    Rf = fused_r(n, u, e)
    F = [Rf.rows[0]] + [BF] * N
    T = monodromy_from_local(Rf, N)
    That = monodromy_from_local(Rf, N, reverse=True)
    z = np.prod([zeta(u + k * 2 * e, e) for k in range(n)]) ** N
    X = embed(fused_k(n, u, params, "plus"), (0,), F) @ T @ embed(fused_k(n, u, params, "minus"), (0,), F) @ That
    return partial_super_trace(X, 0) * (1 / z)


def xi(n: int, u, eta) -> complex:
    """``xi_n(u) = prod_{k=1}^n zeta(2u + [n+k] 2eta)``; ``xi_0 = 1``."""
    return complex(np.prod([zeta(2 * u + (n + k) * 2 * eta, eta) for k in range(1, n + 1)]))


def tau_tilde(n: int, u, params: ModelParams) -> GradedMatrix:
    """``(-1)^n prod_{i<n} xi_i(u)^-1 tau^(n)(u)``; ``tau_tilde^(0) = 1``."""
    if n == 0:
        return GradedMatrix.identity([BF] * params.N)
    f = (-1) ** n / np.prod([xi(i, u, params.eta) for i in range(1, n)])
    return fused_transfer_obc(n, u, params) * f


def delta_tilde(u, params: ModelParams) -> GrassmannNumber:
    """``Delta(u) / zeta(2u + 4eta)``."""
    return sqd_obc(u, params) * (1 / zeta(2 * u + 4 * params.eta, params.eta))


def tau_printed(n: int, u, params: ModelParams) -> GradedMatrix:
    """Open fused transfer matrix in the normalisation obeying the unscaled
    hierarchy: ``(-1)^(n+1)`` times the literal supertrace (so level 0 is ``-1``)."""
    return fused_transfer_obc(n, u, params) * (-1) ** (n + 1)


def check_hierarchy_obc(params: ModelParams, levels=(1, 2, 3), n_samples: int = 2, seed: int = 0,
                        tol: float = 1e-9) -> VerificationReport:
    """Rescaled and unscaled open fusion hierarchies, and commutativity of levels."""
    rng = np.random.default_rng(seed)
    e = params.eta
    rep = VerificationReport("hierarchy-obc", "open fusion hierarchy in rescaled and unscaled form",
                             params=params.to_dict())
    I = GradedMatrix.identity([BF] * params.N)
    for n in levels:
        nice, plain = [], []
        for u in _samples(rng, n_samples, scale=0.5, imag=0.2):
            v = u + (n - 1) * 2 * e
            t_n = tau_tilde(n, u, params)
            lhs = t_n @ tau_tilde(1, u + n * 2 * e, params)
            rhs = tau_tilde(n + 1, u, params) - (I * delta_tilde(v, params)) @ tau_tilde(n - 1, u, params)
            nice.append((lhs - rhs).norm() / max(1.0, lhs.norm()))
            lhs = tau_printed(n, u, params) @ tau_printed(1, u + n * 2 * e, params)
            rhs = (tau_printed(n + 1, u, params) * (-1 / xi(n, u, e))
                   + (I * (sqd_obc(v, params) * (xi(n - 1, u, e) / zeta(2 * u + 2 * n * 2 * e, e))))
                   @ tau_printed(n - 1, u, params))
            plain.append((lhs - rhs).norm() / max(1.0, lhs.norm()))
        rep.add(f"rescaled hierarchy n={n}", nice, tol)
        rep.add(f"unscaled hierarchy n={n}", plain, tol)
    u, v = _samples(rng, 2, scale=0.5, imag=0.2)
    comm = []
    for a in range(1, max(levels) + 2):
        A = fused_transfer_obc(a, u, params)
        for b in range(1, max(levels) + 2):
            B = fused_transfer_obc(b, v, params)
            comm.append(A.commutator(B).norm() / max(1.0, A.norm() * B.norm()))
    rep.add("levels commute", comm, tol)
    return rep


# -- truncation at eta_p -----------------------------------------------------------

def script_m(p: int, u) -> complex:
    """``(1/2 / sin 2eta_p)^p sin([p+1] u) / sin 2eta_p``."""
    s = np.sin(2 * eta_root(p))
    return (0.5 / s) ** p * np.sin((p + 1) * u) / s


def _diag_conj(X: GradedMatrix, d: np.ndarray, extra: int = 1) -> GradedMatrix:
    D = np.kron(np.diag(d), np.eye(extra))
    Di = np.kron(np.diag(1 / d), np.eye(extra))
    return GradedMatrix(D @ X.data @ Di, X.rows, algebra=X.algebra)


def b_transformed_r(n: int, u, eta) -> GradedMatrix:
    """``B R_<<1..n>>q(u) B^-1`` (``n = 0``: the trivial 1 x 2 block)."""
    R = fused_r(n, u, eta)
    if n <= 1:
        return R
    return _diag_conj(R, load_fusion_basis(n).B, 2)


def _block(X: np.ndarray, r, c, extra: int):
    return X[..., r * extra:(r + 1) * extra, c * extra:(c + 1) * extra]


def truncation_r_residuals(p: int, u, transform: str = "B") -> dict:
    """Compare the transformed level-``p+1`` fused R at ``eta_p`` with its block form.

    Returns the residual per block group: the two corners, the centre and the
    decoupling of the first and last block rows.  The block columns below and
    above the corners are left free: the identity is block triangular, which
    is all the supertrace of a product needs.
    """
    e = eta_root(p)
    n = p + 1
    basis = load_fusion_basis(n)
    R = fused_r(n, u, e)
    X = _diag_conj(R, basis.B if transform == "B" else basis.C, 2).data
    M = script_m(p, u)
    sz = np.diag([1.0, -1.0])
    out = {
        "first corner": np.abs(_block(X, 0, 0, 2)[0] + M * sz).max() + np.abs(_block(X, 0, 0, 2)[1:]).max(),
        "last corner": (np.abs(_block(X, n, n, 2)[0] - M * np.linalg.matrix_power(sz, p)).max()
                        + np.abs(_block(X, n, n, 2)[1:]).max()),
    }
    inner = b_transformed_r(p - 1, u + 2 * e, e).data
    centre = np.kron(np.eye(p), sz)[None] @ inner * zeta(u, e)
    out["centre"] = np.abs(X[:, 2:2 * n, 2:2 * n] - centre).max()
    out["first row decoupled"] = np.abs(X[:, :2, 2:]).max()
    out["last row decoupled"] = np.abs(X[:, 2 * n:, :2 * n]).max()
    return out


def check_truncation_r(p: int, n_samples: int = 5, seed: int = 0, tol: float = 1e-11,
                       transforms=("B", "C")) -> VerificationReport:
    """R-matrix truncation at ``eta_p`` with the ``B`` and the ``C`` transformation."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport("truncation-r", "fused R-matrix truncation at roots of unity",
                             params={"p": p, "eta": _cpair(eta_root(p))})
    for t in transforms:
        res: dict[str, list] = {}
        for u in _samples(rng, n_samples):
            for k, v in truncation_r_residuals(p, u, t).items():
                res.setdefault(k, []).append(v)
        for k, v in res.items():
            rep.add(f"{t}: {k}", v, tol)
    return rep


def check_truncation_pbc(p: int, N: int, n_samples: int = 3, seed: int = 0,
                         tol: float = 1e-10) -> VerificationReport:
    """``tau^(p) = (-M_p)^N sz - (-1)^p M_p^N sz^p - zeta^N sz tau^(p-2)(u + 2eta_p)``
    with ``sz`` the product of all ``sigma^z``."""
    rng = np.random.default_rng(seed)
    e = eta_root(p)
    rep = VerificationReport("truncation-pbc", "periodic transfer matrix truncation at roots of unity",
                             params={"p": p, "N": N, "eta": _cpair(e)})
    sz, szp = sigma_z_string(N), sigma_z_string(N, p)
    res = []
    for u in _samples(rng, n_samples):
        M = script_m(p, u)
        lhs = fused_transfer_pbc(p, u, N, e)
        rhs = (sz * (-M) ** N - szp * ((-1) ** p * M ** N)
               - (sz @ fused_transfer_pbc(p - 2, u + 2 * e, N, e)) * zeta(u, e) ** N)
        res.append((lhs - rhs).norm() / max(1.0, lhs.norm()))
    rep.add("truncation identity", res, tol)
    return rep


# -- boundary truncation ------------------------------------------------------------

def truncation_params(params: ModelParams, n: int) -> ModelParams:
    """``params`` at ``eta = eta_{n-1}``.  Where ``cos(2 eta) = 0`` the ``K^+``
    normalisation is replaced by ``1/sin(psi_+)``; the identities are
    homogeneous in it."""
    e = eta_root(n - 1)
    over = params.omega_plus_override
    if abs(np.cos(2 * e)) < 1e-10 and over is None:
        over = 1 / np.sin(params.psi_plus_body)
    return params.with_(eta=e, omega_plus_override=over)


def _as_gr(x) -> GrassmannNumber:
    return x if isinstance(x, GrassmannNumber) else GrassmannNumber.scalar(complex(x))


def mu_kernel(sign: int, m: int, u, params: ModelParams) -> GrassmannNumber:
    """``mu^{+-}_m(u) = +- delta{K^+-}(-+u - 2eta) sin(2eta)/sin(2u - 4eta)
    prod_{k=2}^{2m} sin(2u + 2k eta)/sin(2eta)`` at the parameters' ``eta``."""
    e = params.eta
    s = np.sin(2 * e)
    x = -sign * u - 2 * e
    dK = delta_k_plus(x, params) if sign > 0 else delta_k_minus(x, params)
    pr = np.prod([np.sin(2 * u + k * 2 * e) / s for k in range(2, 2 * m + 1)])
    return _as_gr(dK) * (sign * s / np.sin(2 * u - 4 * e) * pr)


def nu_kernel(sign: int, m: int, u, params: ModelParams) -> GrassmannNumber:
    """``nu^{+-}_m(u) = -+ omega_{+-}/mu^{+-}_m(u) (omega_{+-}/2)^m sin([m+1][u -+ psi_{+-}])
    prod_{i<=m} prod_{j<=i} sin(2u + [i+j] 2eta)/sin(2eta)``."""
    e = params.eta
    s = np.sin(2 * e)
    w = _as_gr(params.omega_plus if sign > 0 else params.omega_minus)
    psi = _as_gr(params.psi_plus if sign > 0 else params.psi_minus)
    pr = np.prod([np.sin(2 * u + (i + j) * 2 * e) / s for i in range(1, m + 1) for j in range(1, i + 1)])
    sn = _as_gr(gr.sin((psi * (-sign) + u) * (m + 1)))
    return (w * (-sign)) * gr.invert(mu_kernel(sign, m, u, params)) * (w * 0.5) ** m * sn * pr


def truncation_k_residuals(n: int, u, params: ModelParams, side: str) -> dict:
    """``C K^{+-}_<<n>> C^-1`` at ``eta_{n-1}`` against its block form (``params`` already
    at ``eta_{n-1}``).  Block columns below the first and above the last
    corner are left free, as for the R-matrix."""
    sign = 1 if side == "plus" else -1
    m, e = n - 1, params.eta
    X = _diag_conj(fused_k(n, u, params, side), load_fusion_basis(n).C).data
    mu = mu_kernel(sign, m, u, params)
    first = mu * nu_kernel(sign, m, -sign * u, params)
    last = mu * nu_kernel(sign, m, sign * u, params) * (sign ** n)
    lvl = n - 2
    inner = fused_k(lvl, u + 2 * e, params, side)
    if lvl >= 1:
        sz = fused_sigma_z(lvl) if lvl > 1 else local_operator("sz")
        inner = sz @ inner if side == "minus" else inner @ sz
        if lvl > 1:
            inner = _diag_conj(inner, load_fusion_basis(lvl).B)
    centre = (inner * mu).data
    return {
        "first corner": np.abs(X[:, 0, 0] - first.coeffs).max(),
        "last corner": np.abs(X[:, n, n] - last.coeffs).max(),
        "centre": np.abs(X[:, 1:n, 1:n] - centre).max(),
        "first row decoupled": np.abs(X[:, 0, 1:]).max(),
        "last row decoupled": np.abs(X[:, n, :n]).max(),
    }


def check_truncation_k(params: ModelParams, n: int, n_samples: int = 3, seed: int = 0,
                       tol: float = 1e-9) -> VerificationReport:
    rng = np.random.default_rng(seed)
    P = truncation_params(params, n)
    rep = VerificationReport("truncation-k", "fused boundary matrix truncation at roots of unity",
                             params={"n": n, **P.to_dict()})
    for side in ("minus", "plus"):
        res: dict[str, list] = {}
        for u in _samples(rng, n_samples, scale=0.5, imag=0.2):
            scale = max(1.0, fused_k(n, u, P, side).norm())
            for k, v in truncation_k_residuals(n, u, P, side).items():
                res.setdefault(k, []).append(v / scale)
        for k, v in res.items():
            rep.add(f"K{'+' if side == 'plus' else '-'}: {k}", v, tol)
    return rep


def phi_kernels(m: int, u, params: ModelParams) -> tuple[GrassmannNumber, GrassmannNumber]:
    """``(phi^id_m(u), phi^tau_m(u))`` at the parameters' ``eta`` (meant to be ``eta_m``)."""
    e, N = params.eta, params.N
    mm = mu_kernel(1, m, u, params) * mu_kernel(-1, m, u, params)
    nus = (nu_kernel(1, m, -u, params) * nu_kernel(-1, m, u, params)
           + nu_kernel(1, m, u, params) * nu_kernel(-1, m, -u, params))
    z = np.prod([zeta(u + k * 2 * e, e) ** (-N) for k in range(m + 1)])
    phi_id = mm * nus * (z * script_m(m, u) ** (2 * N))
    phi_tau = mm * ((zeta(u, e) / zeta(u + m * 2 * e, e)) ** N)
    return phi_id, phi_tau


def phi_tilde_kernels(m: int, u, params: ModelParams, printed_sign: bool = False):
    """Rescaled kernels for ``tau_tilde``.  The identity coefficient carries
    ``(-1)^(m+1)``; ``printed_sign=True`` uses a plain minus sign instead,
    which agrees only for even ``m``."""
    e = params.eta
    phi_id, phi_tau = phi_kernels(m, u, params)
    inv = 1 / np.prod([xi(i, u, e) for i in range(1, m + 1)])
    sgn = -1 if printed_sign else (-1) ** (m + 1)
    shifted = np.prod([xi(i, u + 2 * e, e) for i in range(1, m - 1)])
    return phi_id * (sgn * inv), phi_tau * (inv * shifted)


def check_truncation_obc(params: ModelParams, n: int, n_samples: int = 2, seed: int = 0,
                         tol: float = 1e-9) -> VerificationReport:
    """``tau^(n) = phi^id_{n-1} 1 - phi^tau_{n-1} tau^(n-2)(u + 2eta)`` at ``eta_{n-1}``
    and its rescaled form, for ``n >= 2``."""
    if n < 2:
        raise ValueError("open truncation starts at level 2")
    rng = np.random.default_rng(seed)
    P = truncation_params(params, n)
    e, m = P.eta, n - 1
    I = GradedMatrix.identity([BF] * P.N)
    rep = VerificationReport("truncation-obc", "open transfer matrix truncation at roots of unity",
                             params={"n": n, **P.to_dict()})
    plain, tilde, printed = [], [], []
    for u in _samples(rng, n_samples, scale=0.5, imag=0.2):
        lhs = fused_transfer_obc(n, u, P)
        phi_id, phi_tau = phi_kernels(m, u, P)
        rhs = I * phi_id - fused_transfer_obc(n - 2, u + 2 * e, P) * phi_tau
        plain.append((lhs - rhs).norm() / max(1.0, lhs.norm()))
        lhs = tau_tilde(n, u, P)
        scale = max(1.0, lhs.norm())
        for printed_sign, out in ((False, tilde), (True, printed)):
            t_id, t_tau = phi_tilde_kernels(m, u, P, printed_sign)
            rhs = I * t_id - tau_tilde(n - 2, u + 2 * e, P) * t_tau
            out.append((lhs - rhs).norm() / scale)
    rep.add("truncation identity", plain, tol)
    rep.add("rescaled truncation identity", tilde, tol)
    rep.add("rescaled, uniform minus sign on phi_id", printed, None,
            note="informational: vanishes only for odd n")
    return rep
