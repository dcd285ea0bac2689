"""Graded (super) matrices with Grassmann-valued entries.

A :class:`GradedMatrix` stores one dense complex matrix per Grassmann
monomial, ``data[m, i, j]``, together with the tensor factorisation of its
row and column spaces.  Each factor is a tuple of basis parities, e.g.
``(0, 1)`` for the local ``BF`` space of one fermionic site or ``(0, 1, 0)``
for the fused ``BFB`` auxiliary space.

Sign conventions follow the component rule of the super tensor product,

    (A (x)_s B)^{ac}_{bd} = (-1)^{[p(a) + p(b)] p(c)} A^a_b B^c_d ,

with Grassmann entries multiplied in the written order.  Operators placed on
arbitrary factors of a multi-factor space (``embed``) are expanded into
super tensor products of elementary matrices, so the familiar identities
``P (A (x)_s B) = (B (x)_s A) P`` and ``R_21 = P R_12 P`` hold exactly.
"""
from __future__ import annotations

from functools import lru_cache, reduce
from numbers import Number

import numpy as np

from .grassmann import ATOL, QUOTIENT, GrassmannAlgebra, GrassmannNumber

BF = (0, 1)


class BadSlot(ValueError):
    pass


class BadSite(ValueError):
    pass


class NotSquare(ValueError):
    pass


def _as_factors(factors) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(p) for p in f) for f in factors)


def _dims(factors) -> tuple[int, ...]:
    return tuple(len(f) for f in factors)


def flat_parity(factors) -> np.ndarray:
    """Total parity of every flat basis index of a product space."""
    par = np.zeros(1, dtype=int)
    for f in factors:
        par = (par[:, None] + np.asarray(f)[None, :]).reshape(-1)
    return par % 2


def _digit_parities(factors) -> np.ndarray:
    """Array ``(n_factors, dim)`` of per-factor parities of each flat index."""
    dims = _dims(factors)
    if not dims:
        return np.zeros((0, 1), dtype=int)
    digits = np.unravel_index(np.arange(int(np.prod(dims))), dims)
    return np.stack([np.asarray(f)[d] for f, d in zip(factors, digits)])


def koszul_exponent(prow: np.ndarray, pcol: np.ndarray) -> np.ndarray:
    """``sum_{i<j} [p(a_i) + p(b_i)] p(a_j)`` for stacked factor parities.

    ``prow``/``pcol`` have the factor axis first and broadcast otherwise.
    """
    prow = np.asarray(prow)
    pcol = np.asarray(pcol)
    shift = (prow + pcol) % 2
    prefix = np.cumsum(shift, axis=0) - shift
    return (prefix * prow).sum(axis=0) % 2


class GradedMatrix:
    """Dense matrix over the Grassmann algebra with tensor-factor metadata.

    Parameters
    ----------
    data : array, shape ``(algebra.dim, nrows, ncols)`` or ``(nrows, ncols)``
        Coefficient matrices per monomial.  A 2-D array is taken as the body.
    rows, cols : sequence of parity tuples
        Factorisation of the row (column) space.  ``cols`` defaults to
        ``rows``.
    """

    __slots__ = ("data", "rows", "cols", "algebra", "_nz")
    __array_priority__ = 100
    __array_ufunc__ = None

    def __init__(self, data, rows, cols=None, algebra: GrassmannAlgebra = QUOTIENT):
        rows = _as_factors(rows)
        cols = rows if cols is None else _as_factors(cols)
        data = np.asarray(data, dtype=complex)
        if data.ndim == 2:
            full = np.zeros((algebra.dim,) + data.shape, dtype=complex)
            full[0] = data
            data = full
        shape = (algebra.dim, int(np.prod(_dims(rows))), int(np.prod(_dims(cols))))
        if data.shape != shape:
            raise ValueError(f"data shape {data.shape} does not match factors {shape}")
        self.data = data
        self.rows = rows
        self.cols = cols
        self.algebra = algebra
        self._nz = None

    # -- constructors -------------------------------------------------
    @classmethod
    def identity(cls, factors, algebra: GrassmannAlgebra = QUOTIENT) -> "GradedMatrix":
        factors = _as_factors(factors)
        return cls(np.eye(int(np.prod(_dims(factors)))), factors, algebra=algebra)

    @classmethod
    def zeros(cls, rows, cols=None, algebra: GrassmannAlgebra = QUOTIENT) -> "GradedMatrix":
        rows = _as_factors(rows)
        cols = rows if cols is None else _as_factors(cols)
        return cls(np.zeros((algebra.dim, int(np.prod(_dims(rows))), int(np.prod(_dims(cols))))),
                   rows, cols, algebra)

    @classmethod
    def from_entries(cls, entries, rows, cols=None, algebra: GrassmannAlgebra = QUOTIENT):
        """Build from a nested list of numbers / :class:`GrassmannNumber`."""
        nr, nc = len(entries), len(entries[0])
        data = np.zeros((algebra.dim, nr, nc), dtype=complex)
        for i, row in enumerate(entries):
            for j, x in enumerate(row):
                if isinstance(x, GrassmannNumber):
                    data[:, i, j] = x.coeffs
                else:
                    data[0, i, j] = x
        return cls(data, rows, cols, algebra)

    # -- shape / parts ------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1:]

    @property
    def nonzero_monomials(self) -> np.ndarray:
        if self._nz is None:
            self._nz = np.flatnonzero(np.abs(self.data).reshape(self.algebra.dim, -1).max(axis=1, initial=0) > 0)
        return self._nz

    def is_scalar(self, atol: float = 0.0) -> bool:
        return bool(np.abs(self.data[1:]).max(initial=0.0) <= atol)

    @property
    def body(self) -> np.ndarray:
        return self.data[0]

    def soul(self) -> "GradedMatrix":
        d = self.data.copy()
        d[0] = 0.0
        return GradedMatrix(d, self.rows, self.cols, self.algebra)

    def grassmann_even_part(self) -> "GradedMatrix":
        mask = (self.algebra.parities == 0)[:, None, None]
        return GradedMatrix(self.data * mask, self.rows, self.cols, self.algebra)

    def grassmann_odd_part(self) -> "GradedMatrix":
        mask = (self.algebra.parities == 1)[:, None, None]
        return GradedMatrix(self.data * mask, self.rows, self.cols, self.algebra)

    def entry(self, i: int, j: int) -> GrassmannNumber:
        return GrassmannNumber(self.data[:, i, j], self.algebra)

    def component(self, m: int) -> np.ndarray:
        return self.data[m]

    def norm(self) -> float:
        """Largest absolute coefficient over all entries and monomials."""
        return float(np.abs(self.data).max(initial=0.0))

    def even_operator_defect(self) -> float:
        """Size of the entries violating ``p(entry) = p(row) + p(col)``."""
        pr = flat_parity(self.rows)
        pc = flat_parity(self.cols)
        want = (pr[:, None] + pc[None, :]) % 2
        bad = (self.algebra.parities[:, None, None] != want[None]) & True
        return float(np.abs(self.data * bad).max(initial=0.0))

    def block(self, row_idx, col_idx, rows, cols=None) -> "GradedMatrix":
        """Sub-matrix on flat indices, re-labelled with new factors."""
        d = self.data[:, np.asarray(row_idx)[:, None], np.asarray(col_idx)[None, :]]
        return GradedMatrix(d, rows, cols, self.algebra)

    def relabel(self, rows, cols=None) -> "GradedMatrix":
        return GradedMatrix(self.data, rows, cols, self.algebra)

    # -- arithmetic ---------------------------------------------------
    def _compatible(self, other: "GradedMatrix"):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other):
        if isinstance(other, GradedMatrix):
            self._compatible(other)
            return GradedMatrix(self.data + other.data, self.rows, self.cols, self.algebra)
        if isinstance(other, (Number, GrassmannNumber)):
            return self + GradedMatrix.identity(self.rows, self.algebra) * other
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __neg__(self):
        return GradedMatrix(-self.data, self.rows, self.cols, self.algebra)

    def __mul__(self, other):
        """Right multiplication by a number or Grassmann number (entrywise)."""
        if isinstance(other, Number):
            return GradedMatrix(self.data * other, self.rows, self.cols, self.algebra)
        if isinstance(other, GrassmannNumber):
            return _scale(self, other, left=False)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return GradedMatrix(self.data * other, self.rows, self.cols, self.algebra)
        if isinstance(other, GrassmannNumber):
            return _scale(self, other, left=True)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return GradedMatrix(self.data / other, self.rows, self.cols, self.algebra)
        return NotImplemented

    def __matmul__(self, other):
        if not isinstance(other, GradedMatrix):
            return NotImplemented
        return matmul(self, other)

    def commutator(self, other: "GradedMatrix") -> "GradedMatrix":
        return self @ other - other @ self

    def allclose(self, other, atol: float = ATOL) -> bool:
        return (self - other).norm() <= atol

    def __repr__(self):
        return (f"GradedMatrix(shape={self.shape}, rows={self.rows}, "
                f"monomials={list(self.nonzero_monomials)})")


def _scale(M: GradedMatrix, g: GrassmannNumber, left: bool) -> GradedMatrix:
    out = np.zeros_like(M.data)
    nz = M.nonzero_monomials
    for i, j, k, s in M.algebra.table:
        if left:
            if g.coeffs[i] != 0 and j in nz:
                out[k] += s * g.coeffs[i] * M.data[j]
        elif i in nz and g.coeffs[j] != 0:
            out[k] += s * g.coeffs[j] * M.data[i]
    return GradedMatrix(out, M.rows, M.cols, M.algebra)


def matmul(A: GradedMatrix, B: GradedMatrix) -> GradedMatrix:
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"cannot multiply {A.shape} by {B.shape}")
    nzA, nzB = set(A.nonzero_monomials.tolist()), set(B.nonzero_monomials.tolist())
    shape = (A.algebra.dim, A.shape[0], B.shape[1])
    if nzA <= {0} and nzB <= {0}:
        out = np.zeros(shape, dtype=complex)
        out[0] = A.data[0] @ B.data[0]
        return GradedMatrix(out, A.rows, B.cols, A.algebra)
    out = np.zeros(shape, dtype=complex)
    for i, j, k, s in A.algebra.table:
        if i in nzA and j in nzB:
            prod = A.data[i] @ B.data[j]
            if s > 0:
                out[k] += prod
            else:
                out[k] -= prod
    return GradedMatrix(out, A.rows, B.cols, A.algebra)


def chain(*mats: GradedMatrix) -> GradedMatrix:
    """Ordered product ``mats[0] @ mats[1] @ ...``."""
    return reduce(matmul, mats)


# -- super tensor product and embeddings --------------------------------

def super_tensor(A: GradedMatrix, B: GradedMatrix) -> GradedMatrix:
    r"""``A (x)_s B`` with the Koszul sign ``(-1)^{[p(a)+p(b)] p(c)}``."""
    alg = A.algebra
    pa_r = flat_parity(A.rows)
    pa_c = flat_parity(A.cols)
    pb_r = flat_parity(B.rows)
    sign_exp = ((pa_r[:, None] + pa_c[None, :]) % 2)[:, None, :, None] * pb_r[None, :, None, None]
    sign = np.where(sign_exp % 2, -1.0, 1.0)
    out = np.zeros((alg.dim, A.shape[0], B.shape[0], A.shape[1], B.shape[1]), dtype=complex)
    nzA, nzB = set(A.nonzero_monomials.tolist()), set(B.nonzero_monomials.tolist())
    for i, j, k, s in alg.table:
        if i in nzA and j in nzB:
            out[k] += s * np.einsum("ab,cd->acbd", A.data[i], B.data[j])
    out *= sign[None]
    out = out.reshape(alg.dim, A.shape[0] * B.shape[0], A.shape[1] * B.shape[1])
    return GradedMatrix(out, A.rows + B.rows, A.cols + B.cols, alg)


def embed(op: GradedMatrix, positions, factors) -> GradedMatrix:
    """Graded embedding of ``op`` into the product space ``factors``.

    ``op`` acts on ``len(positions)`` factors (its own row factorisation);
    its k-th factor is placed on ``factors[positions[k]]``.  Positions need
    not be sorted: ``embed(R, (1, 0), ...)`` is ``R_21``.
    """
    factors = _as_factors(factors)
    positions = tuple(int(p) for p in positions)
    n = len(factors)
    if len(set(positions)) != len(positions) or any(not 0 <= p < n for p in positions):
        raise BadSlot(f"invalid positions {positions} for {n} factors")
    if op.rows != op.cols or len(op.rows) != len(positions):
        raise BadSlot("operator factorisation does not match the positions")
    for k, p in enumerate(positions):
        if op.rows[k] != factors[p]:
            raise BadSlot(f"factor {k} of operator has grading {op.rows[k]}, target {factors[p]}")
    ri, ci, sign, D = _embed_plan(op.rows, positions, factors)
    out = np.zeros((op.algebra.dim, D, D), dtype=complex)
    for m in op.nonzero_monomials:
        out[m][ri, ci] = op.data[m][:, :, None] * sign
    return GradedMatrix(out, factors, factors, op.algebra)


@lru_cache(maxsize=512)
def _embed_plan(op_rows, positions, factors):
    """Target indices and Koszul signs of an embedding; depends on gradings only."""
    n = len(factors)
    dims = _dims(factors)
    strides = np.array([int(np.prod(dims[i + 1:])) for i in range(n)])
    others = [i for i in range(n) if i not in positions]
    op_dims = _dims(op_rows)
    dop = int(np.prod(op_dims))
    nrest = int(np.prod([dims[i] for i in others])) if others else 1

    op_digits = np.stack(np.unravel_index(np.arange(dop), op_dims)) if op_dims else np.zeros((0, 1), int)
    rest_digits = (np.stack(np.unravel_index(np.arange(nrest), [dims[i] for i in others]))
                   if others else np.zeros((0, 1), int))

    # full digits for (op index, rest index): shape (n, dop, nrest)
    full = np.zeros((n, dop, nrest), dtype=int)
    for k, p in enumerate(positions):
        full[p] = op_digits[k][:, None]
    for k, p in enumerate(others):
        full[p] = rest_digits[k][None, :]
    flat = np.tensordot(strides, full, axes=1)  # (dop, nrest)

    par = np.stack([np.asarray(factors[i])[full[i]] for i in range(n)])  # (n, dop, nrest)
    kfull = koszul_exponent(par[:, :, None, :], par[:, None, :, :])  # (dop, dop, nrest)

    opar = np.stack([np.asarray(op_rows[k])[op_digits[k]] for k in range(len(positions))]) \
        if positions else np.zeros((0, dop), int)
    kop = koszul_exponent(opar[:, :, None], opar[:, None, :])  # (dop, dop)
    epar = (opar[:, :, None] + opar[:, None, :]) % 2  # parity of each elementary factor
    reorder = np.zeros((dop, dop), dtype=int)
    for a in range(len(positions)):
        for b in range(a + 1, len(positions)):
            if positions[a] > positions[b]:
                reorder += epar[a] * epar[b]
    exponent = (kfull + (kop + reorder)[:, :, None]) % 2
    sign = np.where(exponent, -1.0, 1.0)
    ri = np.broadcast_to(flat[:, None, :], (dop, dop, nrest))
    ci = np.broadcast_to(flat[None, :, :], (dop, dop, nrest))
    return ri, ci, sign, int(np.prod(dims))


def embed_site(op: GradedMatrix, j: int, N: int, local=BF) -> GradedMatrix:
    """``1^{(x)s (j-1)} (x)_s op (x)_s 1^{(x)s (N-j)}`` with 1-based ``j``."""
    if not 1 <= j <= N:
        raise BadSite(f"site {j} outside 1..{N}")
    return embed(op, (j - 1,), [local] * N)


def graded_permutation(f1=BF, f2=BF, algebra: GrassmannAlgebra = QUOTIENT) -> GradedMatrix:
    """``P = sum (-1)^{p(b)} e_a^b (x)_s e_b^a`` on ``f1 (x) f2`` (``f1 == f2``)."""
    f1, f2 = tuple(f1), tuple(f2)
    if f1 != f2:
        raise BadSlot("graded permutation needs two copies of the same space")
    d = len(f1)
    P = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            # component (a b; b a) of e_a^b (x)_s e_b^a carries (-1)^{(p(a)+p(b)) p(b)}
            P[a * d + b, b * d + a] = (-1) ** ((f1[a] * f1[b]) % 2)
    return GradedMatrix(P, (f1, f2), algebra=algebra)


# -- transpositions and traces --------------------------------------------

def _grid_parities(A: GradedMatrix):
    pr = _digit_parities(A.rows)  # (n, R)
    pc = _digit_parities(A.cols)  # (n, C)
    return pr[:, :, None], pc[:, None, :]


def partial_super_transpose(A: GradedMatrix, slot: int, direction: str = "st") -> GradedMatrix:
    """Super transposition (``"st"``) or its inverse (``"ist"``) on one factor."""
    if A.rows != A.cols:
        raise NotSquare("partial transposition needs identical row/column factors")
    n = len(A.rows)
    if not 0 <= slot < n:
        raise BadSlot(f"slot {slot} outside 0..{n - 1}")
    if direction not in ("st", "ist"):
        raise ValueError("direction must be 'st' or 'ist'")
    pr, pc = _grid_parities(A)
    pa, pb = pr[slot], pc[slot]
    flip = (pa + pb) % 2
    local = pb * flip if direction == "st" else pa * flip
    before = ((pr[:slot] + pc[:slot]) % 2).sum(axis=0) if slot else 0
    exponent = (local + before * flip) % 2
    signed = A.data * np.where(exponent, -1.0, 1.0)[None]
    dims = _dims(A.rows)
    t = signed.reshape((A.algebra.dim,) + dims + dims)
    t = np.swapaxes(t, 1 + slot, 1 + n + slot)
    return GradedMatrix(t.reshape(A.data.shape), A.rows, A.cols, A.algebra)


def super_transpose(A: GradedMatrix, direction: str = "st") -> GradedMatrix:
    """Total super transposition, treating the whole space as one factor."""
    flat = A.relabel([tuple(flat_parity(A.rows))], [tuple(flat_parity(A.cols))])
    out = partial_super_transpose(flat, 0, direction)
    return out.relabel(A.rows, A.cols)


def super_trace(A: GradedMatrix) -> GrassmannNumber:
    if A.shape[0] != A.shape[1]:
        raise NotSquare(f"super trace of a {A.shape} matrix")
    sign = np.where(flat_parity(A.rows), -1.0, 1.0)
    return GrassmannNumber(np.einsum("mii,i->m", A.data, sign), A.algebra)


def partial_super_trace(A: GradedMatrix, slots) -> GradedMatrix:
    """Supertrace over the factors in ``slots``.

    Tracing factor ``k`` of ``A_1 (x)_s ... (x)_s A_n`` gives
    ``str(A_k) A_1 (x)_s ... (x)_s A_n`` without the k-th factor; for leading
    factors this is the plain component formula.
    """
    if isinstance(slots, int):
        slots = (slots,)
    out = A
    for slot in sorted(set(slots), reverse=True):
        out = _partial_super_trace_one(out, slot)
    return out


def _partial_super_trace_one(A: GradedMatrix, slot: int) -> GradedMatrix:
    if A.rows[slot] != A.cols[slot]:
        raise NotSquare(f"factor {slot} is not square")
    n = len(A.rows)
    if not 0 <= slot < n:
        raise BadSlot(f"slot {slot} outside 0..{n - 1}")
    dims_r, dims_c = _dims(A.rows), _dims(A.cols)
    d = dims_r[slot]
    fpar = np.asarray(A.rows[slot])
    new_rows = A.rows[:slot] + A.rows[slot + 1:]
    new_cols = A.cols[:slot] + A.cols[slot + 1:]
    t = A.data.reshape((A.algebra.dim,) + dims_r + dims_c)
    # parity of preceding factors on the reduced grid
    pr = _digit_parities(new_rows)[:slot]
    pc = _digit_parities(new_cols)[:slot]
    before = ((pr[:, :, None] + pc[:, None, :]) % 2).sum(axis=0) % 2 if slot else np.zeros(
        (int(np.prod(_dims(new_rows))), int(np.prod(_dims(new_cols)))), dtype=int)
    Rn, Cn = int(np.prod(_dims(new_rows))), int(np.prod(_dims(new_cols)))
    out = np.zeros((A.algebra.dim, Rn, Cn), dtype=complex)
    for g in range(d):
        sl = [slice(None)] * (1 + 2 * n)
        sl[1 + slot] = g
        sl[1 + n + slot] = g
        piece = t[tuple(sl)].reshape(A.algebra.dim, Rn, Cn)
        sign = np.where((fpar[g] * (1 + before)) % 2, -1.0, 1.0)
        out += piece * sign[None]
    return GradedMatrix(out, new_rows, new_cols, A.algebra)


# -- local fermion operators ----------------------------------------------

def local_operator(name: str, algebra: GrassmannAlgebra = QUOTIENT) -> GradedMatrix:
    """One-site operators on ``BF``: ``n``, ``nbar``, ``c``, ``cdag``, ``sz``, ``id``."""
    mats = {
        "n": [[0, 0], [0, 1]],
        "nbar": [[1, 0], [0, 0]],
        "c": [[0, 1], [0, 0]],
        "cdag": [[0, 0], [1, 0]],
        "sz": [[1, 0], [0, -1]],
        "id": [[1, 0], [0, 1]],
    }
    return GradedMatrix(np.array(mats[name], dtype=complex), (BF,), algebra=algebra)


def site_operator(name: str, j: int, N: int, algebra: GrassmannAlgebra = QUOTIENT) -> GradedMatrix:
    return embed_site(local_operator(name, algebra), j, N)


def sigma_z_string(N: int, power: int = 1, algebra: GrassmannAlgebra = QUOTIENT) -> GradedMatrix:
    """``prod_i (sigma^z_{q_i})^power`` on ``N`` sites."""
    diag = np.where(flat_parity([BF] * N), -1.0, 1.0) if power % 2 else np.ones(2 ** N)
    return GradedMatrix(np.diag(diag).astype(complex), [BF] * N, algebra=algebra)


def number_operator(N: int, algebra: GrassmannAlgebra = QUOTIENT) -> GradedMatrix:
    digits = _digit_parities([BF] * N)
    return GradedMatrix(np.diag(digits.sum(axis=0)).astype(complex), [BF] * N, algebra=algebra)
