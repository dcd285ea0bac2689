"""Exact diagonalisation over Grassmann-valued matrices.

The body of a Grassmann matrix is diagonalised numerically; the soul is
treated as a perturbation.  In the quotient algebra a product of three soul
elements vanishes, so second-order perturbation theory is exact.  For a
matrix ``W = D0 + W1 + W2`` in the body eigenbasis (``W1``: degree-one
monomials, ``W2``: degree two) the similarity ``1 + X1 + X2`` with

    X1_ki = W1_ki / (l_i - l_k),
    X2_ki = (W2 + W1 X1 - X1 L1)_ki / (l_i - l_k)       (k != i)

diagonalises ``W`` to ``L = D0 + L1 + L2`` with ``L1 = diag W1`` and
``L2_i = (W2 + W1 X1)_ii``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .graded import BF, GradedMatrix, flat_parity, number_operator, sigma_z_string
from .grassmann import QUOTIENT, GrassmannNumber
from .trigpoly import TrigPoly, avoid_poles, fourier_nodes, tp_interpolate

DEGENERACY_TOL = 1e-9


class UnresolvedDegeneracy(np.linalg.LinAlgError):
    def __init__(self, block, residual):
        super().__init__(f"degenerate block {list(block)} is not diagonal to second order "
                         f"(coupling {residual:.2e})")
        self.block = block
        self.residual = residual


class TrackingLost(RuntimeError):
    pass


class NotCommuting(ValueError):
    pass


@dataclass
class BodySpectrum:
    values: np.ndarray
    right: np.ndarray        # columns are right eigenvectors
    left: np.ndarray         # inverse of ``right``
    defective: bool = False


def eigen_body(m: GradedMatrix | np.ndarray, cond_limit: float = 1e10) -> BodySpectrum:
    """Dense eigendecomposition of the body.

    If the eigenvector matrix is numerically singular (defective input) the
    Schur form is returned instead, with ``defective=True``.
    """
    A = m.body if isinstance(m, GradedMatrix) else np.asarray(m, dtype=complex)
    w, V = sla.eig(A)
    if np.linalg.cond(V) < cond_limit:
        return BodySpectrum(w, V, np.linalg.inv(V))
    T, Z = sla.schur(A, output="complex")
    return BodySpectrum(np.diag(T).copy(), Z, Z.conj().T, defective=True)


def _scalar_matrix(a: np.ndarray, like: GradedMatrix) -> GradedMatrix:
    n, k = a.shape
    return GradedMatrix(a, [tuple([0] * n)], [tuple([0] * k)], like.algebra)


def _flat(m: GradedMatrix) -> GradedMatrix:
    n, k = m.shape
    return GradedMatrix(m.data, [tuple([0] * n)], [tuple([0] * k)], m.algebra)


def degeneracy_blocks(values, tol: float = DEGENERACY_TOL) -> list[list[int]]:
    order = np.argsort(values.real + 1e-3 * values.imag)
    blocks, cur = [], [int(order[0])]
    for i in order[1:]:
        if abs(values[i] - values[cur[-1]]) <= tol * max(1.0, abs(values[i])):
            cur.append(int(i))
        else:
            blocks.append(cur)
            cur = [int(i)]
    blocks.append(cur)
    return blocks


@dataclass
class GrassmannSpectrum:
    """Eigenvalues with nilpotent corrections and the transformed eigenbasis.

    ``values[i]`` is the full Grassmann eigenvalue; ``first[i]`` and
    ``second[i]`` are its degree-one and degree-two soul parts.  The
    eigenvectors are the columns of ``right @ (1 + X)``.
    """

    body: np.ndarray
    values: list
    first: list
    second: list
    right: np.ndarray
    left: np.ndarray
    X: GradedMatrix
    blocks: list = field(default_factory=list)

    def reconstruct(self) -> GradedMatrix:
        """``V (1+X) diag(values) (1+X)^-1 V^-1``."""
        n = len(self.values)
        alg = self.X.algebra
        L = np.zeros((alg.dim, n, n), dtype=complex)
        for i, v in enumerate(self.values):
            L[:, i, i] = v.coeffs
        Lm = GradedMatrix(L, self.X.rows, self.X.cols, alg)
        one = GradedMatrix.identity(self.X.rows, alg)
        S = one + self.X
        Sinv = one - self.X + self.X @ self.X - self.X @ self.X @ self.X
        V = _scalar_matrix(self.right, self.X)
        Vi = _scalar_matrix(self.left, self.X)
        return V @ S @ Lm @ Sinv @ Vi


def _degree_part(m: GradedMatrix, degree: int) -> GradedMatrix:
    mask = (m.algebra.degrees == degree)[:, None, None]
    return GradedMatrix(m.data * mask, m.rows, m.cols, m.algebra)


def eigen_grassmann(m: GradedMatrix, basis: BodySpectrum | None = None,
                    tol: float = DEGENERACY_TOL, atol: float = 1e-10) -> GrassmannSpectrum:
    """Grassmann eigenvalues by exact second-order nilpotent perturbation theory.

    Parameters
    ----------
    basis : BodySpectrum, optional
        Eigenbasis of the body to use, e.g. a joint eigenbasis of a commuting
        family.  Needed when the body has degeneracies that only another
        operator resolves.

    Raises
    ------
    UnresolvedDegeneracy
        if couplings inside a degenerate body block survive to second order.
    """
    if basis is None:
        basis = eigen_body(m)
    V, Vi = basis.right, basis.left
    W = _scalar_matrix(Vi, m) @ _flat(m) @ _scalar_matrix(V, m)
    lam = np.diag(W.body).copy()
    n = lam.size
    blocks = degeneracy_blocks(lam, tol)
    same = np.zeros((n, n), dtype=bool)
    for b in blocks:
        same[np.ix_(b, b)] = True
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_gap = np.where(same, 0.0, 1.0 / (lam[None, :] - lam[:, None]))  # [k, i] -> 1/(l_i - l_k)

    alg = m.algebra
    body_off = np.abs(W.body - np.diag(lam)).max(initial=0.0)
    W1, W2 = _degree_part(W, 1), _degree_part(W, 2)
    scale = max(1.0, np.abs(lam).max(initial=0.0))
    # inside degenerate blocks the first-order coupling must already vanish
    in_block = np.abs(W1.data * (same & ~np.eye(n, dtype=bool))[None]).max(initial=0.0)
    if in_block > atol * scale or body_off > atol * scale:
        worst = max(blocks, key=len)
        raise UnresolvedDegeneracy(worst, max(in_block, body_off))

    X1 = GradedMatrix(W1.data * inv_gap[None], W.rows, W.cols, alg)
    L1 = GradedMatrix(W1.data * np.eye(n)[None], W.rows, W.cols, alg)
    Y2 = W2 + W1 @ X1 - X1 @ L1
    coupling = np.abs(Y2.data * (same & ~np.eye(n, dtype=bool))[None]).max(initial=0.0)
    if coupling > atol * scale:
        bad = [b for b in blocks if len(b) > 1]
        raise UnresolvedDegeneracy(bad[0] if bad else blocks[0], coupling)
    X2 = GradedMatrix(Y2.data * inv_gap[None], W.rows, W.cols, alg)
    values, first, second = [], [], []
    for i in range(n):
        f = GrassmannNumber(W1.data[:, i, i], alg)
        s = GrassmannNumber(Y2.data[:, i, i], alg)
        first.append(f)
        second.append(s)
        values.append(GrassmannNumber.scalar(lam[i], alg) + f + s)
    return GrassmannSpectrum(lam, values, first, second, V, Vi, X1 + X2, blocks)


# -- commuting families ---------------------------------------------------------

def joint_basis(mats, seed: int = 0, min_gap: float = 1e-6) -> BodySpectrum:
    """Eigenbasis of a random combination of commuting bodies.

    A generic combination separates every joint eigenvalue, so its
    eigenvectors diagonalise each member.
    """
    rng = np.random.default_rng(seed)
    for _ in range(6):
        c = rng.normal(size=len(mats)) + 1j * rng.normal(size=len(mats))
        combo = sum(ci * (m.body if isinstance(m, GradedMatrix) else m) for ci, m in zip(c, mats))
        spec = eigen_body(combo)
        w = spec.values
        gaps = np.abs(w[:, None] - w[None, :]) + np.eye(w.size) * 1e300
        if gaps.min() > min_gap * max(1.0, np.abs(w).max()):
            return spec
    return spec


def diagonal_in_basis(m: GradedMatrix, basis: BodySpectrum) -> tuple[np.ndarray, float]:
    W = basis.left @ m.body @ basis.right
    d = np.diag(W).copy()
    return d, float(np.abs(W - np.diag(d)).max(initial=0.0))


def eigenfunction_extract(builder: Callable, d: int, prefactor: Callable | None = None, poles=None,
                          tol: float = 1e-9, seed: int = 0, imag: float = 0.0,
                          n_holdout: int = 3, grassmann: bool | None = None,
                          basis: BodySpectrum | None = None):
    """Per-eigenstate Laurent polynomials of a commuting family ``u -> M(u)``.

    The family is diagonalised in one joint eigenbasis; at every node the
    Grassmann eigenvalues in that basis are multiplied by ``prefactor(u)``
    (e.g. ``zeta(u)^N`` to clear the poles of the open transfer matrix) and
    interpolated at degree ``d``.

    Returns
    -------
    polys : list of TrigPoly
    basis : BodySpectrum

    Raises
    ------
    TrackingLost
        if the joint basis fails to diagonalise the family at some node even
        after a fourfold denser resampling of the basis-building points.
    """
    nodes = avoid_poles(fourier_nodes(2 * d + 1, imag=imag), poles)
    extra = avoid_poles(fourier_nodes(n_holdout, offset=0.5771, imag=imag + 0.05), poles)
    allu = list(nodes) + list(extra)
    mats = [builder(u) for u in allu]
    if grassmann is None:
        grassmann = any(not m.is_scalar() for m in mats)
    if basis is None:
        for attempt, k in enumerate((5, 20)):
            probe = [mats[i] for i in np.linspace(0, len(mats) - 1, min(k, len(mats))).astype(int)]
            if k > len(mats):
                probe = probe + [builder(u) for u in fourier_nodes(k - len(mats), offset=0.91, imag=imag + 0.1)]
            basis = joint_basis(probe, seed=seed + attempt)
            worst = max(diagonal_in_basis(m, basis)[1] for m in mats)
            if worst < 1e-8 * max(1.0, max(np.abs(m.body).max() for m in mats)):
                break
        else:
            raise TrackingLost(f"joint eigenbasis leaves off-diagonal residue {worst:.2e}")
    n = basis.values.size
    alg = mats[0].algebra
    vals = np.zeros((len(allu), n, alg.dim), dtype=complex)
    for a, (u, m) in enumerate(zip(allu, mats)):
        pf = 1.0 if prefactor is None else prefactor(u)
        if grassmann:
            spec = eigen_grassmann(m, basis)
            for i, v in enumerate(spec.values):
                vals[a, i] = v.coeffs * pf
        else:
            vals[a, :, 0] = diagonal_in_basis(m, basis)[0] * pf
    k = len(nodes)
    polys = []
    for i in range(n):
        samples = [(allu[a], GrassmannNumber(vals[a, i], alg)) for a in range(k)]
        held = [(allu[a], GrassmannNumber(vals[a, i], alg)) for a in range(k, len(allu))]
        polys.append(tp_interpolate(samples, d, holdout=held, tol=tol, algebra=alg))
    return polys, basis


def state_labels(basis: BodySpectrum, N: int) -> dict:
    """Particle number and fermion parity of each joint eigenstate."""
    Nop = number_operator(N).body
    M = np.real(np.diag(basis.left @ Nop @ basis.right))
    Mi = np.rint(M).astype(int)
    return {"M": Mi, "parity": Mi % 2, "spread": float(np.abs(M - Mi).max(initial=0.0))}


# -- sectors --------------------------------------------------------------------

def graded_parity_conjugate(m: GradedMatrix) -> GradedMatrix:
    """``P m P`` with the Grassmann-odd coefficients sign-flipped, ``P = prod sigma^z``.

    An even supermatrix commuting with the fermion parity is invariant.
    """
    pr, pc = flat_parity(m.rows), flat_parity(m.cols)
    s = np.where((pr[:, None] + pc[None, :]) % 2, -1.0, 1.0)
    g = np.where(m.algebra.parities == 1, -1.0, 1.0)
    return GradedMatrix(m.data * s[None] * g[:, None, None], m.rows, m.cols, m.algebra)


def simultaneous_sector_split(ops, N: int, tol: float = 1e-12) -> dict:
    """Common block decomposition of a commuting family.

    Uses the particle number when every operator conserves it, otherwise
    the fermion parity (in the graded sense of
    :func:`graded_parity_conjugate`).

    Returns
    -------
    dict with keys ``label`` ("M" or "parity"), ``sectors`` (label ->
    basis indices) and ``leak`` (largest off-sector element).

    Raises
    ------
    NotCommuting
        if two operators fail to commute or no symmetry is preserved.
    """
    for a in range(len(ops)):
        for b in range(a + 1, len(ops)):
            c = ops[a].commutator(ops[b]).norm()
            if c > tol * max(1.0, ops[a].norm() * ops[b].norm()):
                raise NotCommuting(f"operators {a}, {b} fail to commute ({c:.2e})")
    Nq = np.diag(number_operator(N).body).real.astype(int)
    leak_M = max(np.abs(op.data * (Nq[:, None] != Nq[None, :])[None]).max(initial=0.0) for op in ops)
    if leak_M <= tol * max(1.0, max(op.norm() for op in ops)):
        sectors = {int(M): np.flatnonzero(Nq == M) for M in range(N + 1)}
        return {"label": "M", "sectors": sectors, "leak": float(leak_M)}
    par = Nq % 2
    leak_p = max((graded_parity_conjugate(op) - op).norm() for op in ops)
    if leak_p > tol * max(1.0, max(op.norm() for op in ops)):
        raise NotCommuting(f"neither particle number nor graded parity is conserved ({leak_p:.2e})")
    sectors = {p: np.flatnonzero(par == p) for p in (0, 1)}
    body_leak = max(np.abs(op.body * (par[:, None] != par[None, :])).max(initial=0.0) for op in ops)
    return {"label": "parity", "sectors": sectors, "leak": float(body_leak)}


# -- operator-level asymptotics ----------------------------------------------

def interpolate_operator(builder: Callable, d: int, poles=None, imag: float = 0.0,
                         tol: float = 1e-9) -> np.ndarray:
    """Laurent coefficients ``C[k + d]`` (each a data array) of an operator
    function of degree ``d``."""
    nodes = avoid_poles(fourier_nodes(2 * d + 1, imag=imag), poles)
    mats = [builder(u) for u in nodes]
    shape = mats[0].data.shape
    Y = np.stack([m.data.ravel() for m in mats])
    V = np.exp(1j * np.multiply.outer(nodes, np.arange(-d, d + 1)))
    C = np.linalg.solve(V, Y)
    u_chk = avoid_poles([0.5771 + 1j * (imag + 0.05)], poles)[0]
    chk = builder(u_chk).data.ravel()
    err = np.abs(np.exp(1j * np.arange(-d, d + 1) * u_chk) @ C - chk).max()
    if err > tol * max(1.0, np.abs(chk).max()):
        from .trigpoly import DegreeTooSmall
        raise DegreeTooSmall(f"operator interpolation residual {err:.2e}")
    return C.reshape((2 * d + 1,) + shape), mats[0]


def obc_operator_asymptotics(params):
    """Leading large-``z`` coefficient of the open ``tau`` next to its prediction.

    ``zeta^N(u) tau(u)`` is a Laurent polynomial of degree ``2N + 4``.
    """
    from .boundary import predicted_obc_asymptotic_operator, transfer_obc
    from .bulk import zeta
    N, e = params.N, params.eta
    d = 2 * N + 4
    C, proto = interpolate_operator(lambda u: transfer_obc(u, params) * zeta(u, e) ** N, d,
                                    poles=[lambda u: zeta(u, e)])
    deg, pred = predicted_obc_asymptotic_operator(params)
    zeta_lead = (1.0 / (4 * np.sin(2 * e) ** 2)) ** N
    lead = GradedMatrix(C[d + 2 * N + deg] / zeta_lead, proto.rows, proto.cols, proto.algebra)
    return lead, pred, deg


# -- export -------------------------------------------------------------------

def spectrum_csv(us, values, labels=None) -> str:
    """Rows ``u_re, u_im, state, label, re, im`` (body) for an eigenvalue table.

    ``values[a][i]`` is the eigenvalue of state ``i`` at ``us[a]``
    (complex or GrassmannNumber; souls go in extra columns).
    """
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    first = values[0][0]
    soul_cols = []
    if isinstance(first, GrassmannNumber):
        soul_cols = [first.algebra.label(m) for m in first.algebra.masks[1:]]
    w.writerow(["u_re", "u_im", "state", "label", "re", "im"]
               + [f"{c}_{p}" for c in soul_cols for p in ("re", "im")])
    for a, u in enumerate(us):
        for i, v in enumerate(values[a]):
            lab = "" if labels is None else labels[i]
            if isinstance(v, GrassmannNumber):
                row = [v.body.real, v.body.imag] + [x for c in v.coeffs[1:] for x in (c.real, c.imag)]
            else:
                row = [complex(v).real, complex(v).imag]
            w.writerow([f"{complex(u).real:.12g}", f"{complex(u).imag:.12g}", i, lab]
                       + [f"{x:.15e}" for x in row])
    return out.getvalue()


def trigpoly_json(polys, labels=None) -> str:
    data = []
    for i, p in enumerate(polys):
        entry = {"state": i, "degree": p.d,
                 "coeffs": {p.algebra.label(m): [[float(f"{c.real:.15g}"), float(f"{c.imag:.15g}")]
                                                 for c in p.coeffs[k]]
                            for k, m in enumerate(p.algebra.masks) if np.abs(p.coeffs[k]).max() > 0}}
        if labels is not None:
            entry["label"] = labels[i]
        data.append(entry)
    return json.dumps(data, indent=1, sort_keys=True) + "\n"
