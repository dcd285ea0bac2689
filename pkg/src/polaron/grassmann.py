"""Numerical Grassmann numbers over the four odd boundary generators.

The generators are, in canonical order, ``alpha_m, beta_m, alpha_p, beta_p``
(the off-diagonal parameters of the left and right boundary matrices).  By
default the algebra is the quotient by ``alpha_m*beta_m = alpha_p*beta_p = 0``,
which leaves the nine monomials

    1; alpha_m, beta_m, alpha_p, beta_p;
    alpha_m alpha_p, alpha_m beta_p, beta_m alpha_p, beta_m beta_p.

The full 16-dimensional exterior algebra is available as :data:`FULL` so that
quotient results can be compared against "multiply first, project later".

A monomial is stored as a bit mask (bit ``g`` set when generator ``g`` is
present).  Coefficients live in a dense complex vector indexed by the
algebra's monomial list.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from numbers import Number

import numpy as np

GENERATORS = ("alpha_m", "beta_m", "alpha_p", "beta_p")
ATOL = 1e-12


class ZeroBody(ArithmeticError):
    """Raised when inverting a Grassmann number whose body vanishes."""


class MixedParity(ValueError):
    """Raised when a parity is requested for an inhomogeneous element."""


EVEN, ODD = 0, 1


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _reorder_sign(m1: int, m2: int) -> int:
    """Sign of sorting the concatenation ``gens(m1) + gens(m2)``."""
    inversions = 0
    for g in range(4):
        if m1 >> g & 1:
            inversions += _popcount(m2 & ((1 << g) - 1))
    return -1 if inversions & 1 else 1


class GrassmannAlgebra:
    """Monomial bookkeeping and the structure constants of the product.

    Parameters
    ----------
    quotient : bool
        Drop every monomial containing both ``alpha_m, beta_m`` or both
        ``alpha_p, beta_p``.
    """

    def __init__(self, quotient: bool = True):
        self.quotient = quotient
        masks = [m for m in range(16) if not (quotient and self.forbidden(m))]
        masks.sort(key=lambda m: (_popcount(m), m))
        self.masks = tuple(masks)
        self.index = {m: i for i, m in enumerate(self.masks)}
        self.dim = len(self.masks)
        self.degrees = np.array([_popcount(m) for m in self.masks])
        self.parities = self.degrees % 2
        table = []
        for i, m1 in enumerate(self.masks):
            for j, m2 in enumerate(self.masks):
                if m1 & m2:
                    continue
                m = m1 | m2
                if m not in self.index:
                    continue
                table.append((i, j, self.index[m], _reorder_sign(m1, m2)))
        self.table = tuple(table)

    @staticmethod
    def forbidden(mask: int) -> bool:
        return (mask & 0b0011) == 0b0011 or (mask & 0b1100) == 0b1100

    @cached_property
    def product_tensor(self) -> np.ndarray:
        """``c[k] = sum_ij P[i, j, k] a[i] b[j]``."""
        P = np.zeros((self.dim, self.dim, self.dim))
        for i, j, k, s in self.table:
            P[i, j, k] = s
        return P

    def label(self, mask: int) -> str:
        if mask == 0:
            return "1"
        return "*".join(GENERATORS[g] for g in range(4) if mask >> g & 1)

    def __repr__(self):
        return f"GrassmannAlgebra(quotient={self.quotient}, dim={self.dim})"


QUOTIENT = GrassmannAlgebra(quotient=True)
FULL = GrassmannAlgebra(quotient=False)


def _mask_of(names) -> int:
    mask = 0
    for name in names:
        mask |= 1 << GENERATORS.index(name)
    return mask


@dataclass(frozen=True, eq=False)
class GrassmannNumber:
    """Immutable element of a :class:`GrassmannAlgebra`."""

    coeffs: np.ndarray
    algebra: GrassmannAlgebra = QUOTIENT
    __array_ufunc__ = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.algebra.dim,):
            raise ValueError(f"expected {self.algebra.dim} coefficients, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- construction -------------------------------------------------
    @classmethod
    def scalar(cls, value, algebra: GrassmannAlgebra = QUOTIENT) -> "GrassmannNumber":
        c = np.zeros(algebra.dim, dtype=complex)
        c[0] = value
        return cls(c, algebra)

    @classmethod
    def monomial(cls, names, coeff=1.0, algebra: GrassmannAlgebra = QUOTIENT) -> "GrassmannNumber":
        """Product of the named generators in the given order, times ``coeff``.

        The order matters: ``monomial(["beta_p", "alpha_m"])`` equals
        ``-monomial(["alpha_m", "beta_p"])``.  Returns zero for forbidden
        or repeated generators.
        """
        out = cls.scalar(coeff, algebra)
        for name in names:
            out = out * cls.generator(name, algebra=algebra)
        return out

    @classmethod
    def generator(cls, name: str, coeff=1.0, algebra: GrassmannAlgebra = QUOTIENT) -> "GrassmannNumber":
        c = np.zeros(algebra.dim, dtype=complex)
        c[algebra.index[_mask_of([name])]] = coeff
        return cls(c, algebra)

    @classmethod
    def from_dict(cls, terms: dict, algebra: GrassmannAlgebra = QUOTIENT) -> "GrassmannNumber":
        """Build from ``{"alpha_m": c, "alpha_m*beta_p": c2, "1": c0}``."""
        c = np.zeros(algebra.dim, dtype=complex)
        for key, value in terms.items():
            names = [] if key in ("", "1") else key.split("*")
            term = cls.monomial(names, 1.0, algebra)
            c += complex(value) * term.coeffs
        return cls(c, algebra)

    def to_dict(self, atol: float = 0.0) -> dict:
        return {
            self.algebra.label(m): complex(self.coeffs[i])
            for i, m in enumerate(self.algebra.masks)
            if abs(self.coeffs[i]) > atol
        }

    # -- parts --------------------------------------------------------
    @property
    def body(self) -> complex:
        return complex(self.coeffs[0])

    @property
    def soul(self) -> "GrassmannNumber":
        c = self.coeffs.copy()
        c[0] = 0.0
        return GrassmannNumber(c, self.algebra)

    def even_part(self) -> "GrassmannNumber":
        return GrassmannNumber(self.coeffs * (self.algebra.parities == 0), self.algebra)

    def odd_part(self) -> "GrassmannNumber":
        return GrassmannNumber(self.coeffs * (self.algebra.parities == 1), self.algebra)

    def parity(self, atol: float = ATOL) -> int:
        odd = np.abs(self.coeffs[self.algebra.parities == 1]).max(initial=0.0)
        even = np.abs(self.coeffs[self.algebra.parities == 0]).max(initial=0.0)
        if odd > atol and even > atol:
            raise MixedParity(f"element has even ({even:.2e}) and odd ({odd:.2e}) parts")
        return ODD if odd > atol else EVEN

    def is_scalar(self, atol: float = 0.0) -> bool:
        return bool(np.abs(self.coeffs[1:]).max(initial=0.0) <= atol)

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> "GrassmannNumber":
        if isinstance(other, GrassmannNumber):
            if other.algebra is not self.algebra:
                raise ValueError("operands belong to different Grassmann algebras")
            return other
        if isinstance(other, Number):
            return GrassmannNumber.scalar(other, self.algebra)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return GrassmannNumber(self.coeffs + other.coeffs, self.algebra)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannNumber(-self.coeffs, self.algebra)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return GrassmannNumber(self.coeffs - other.coeffs, self.algebra)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return GrassmannNumber(self.coeffs * other, self.algebra)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return GrassmannNumber(self.coeffs * other, self.algebra)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return GrassmannNumber(self.coeffs / other, self.algebra)
        return self * invert(self._coerce(other))

    def __rtruediv__(self, other):
        return invert(self) * other

    def __pow__(self, n: int):
        if n < 0:
            return invert(self) ** (-n)
        out = GrassmannNumber.scalar(1.0, self.algebra)
        for _ in range(n):
            out = out * self
        return out

    def allclose(self, other, atol: float = ATOL) -> bool:
        other = self._coerce(other)
        return bool(np.abs(self.coeffs - other.coeffs).max() <= atol)

    def norm(self) -> float:
        return float(np.abs(self.coeffs).max())

    def __repr__(self):
        terms = self.to_dict(atol=0.0) or {"1": 0j}
        return "GrassmannNumber(" + " + ".join(f"({v:.6g})*{k}" for k, v in terms.items()) + ")"


def mul(a: GrassmannNumber, b: GrassmannNumber) -> GrassmannNumber:
    """Product with anticommuting reordering signs; forbidden monomials dropped."""
    c = np.einsum("i,j,ijk->k", a.coeffs, b.coeffs, a.algebra.product_tensor)
    return GrassmannNumber(c, a.algebra)


def body(a: GrassmannNumber) -> complex:
    return a.body


def soul(a: GrassmannNumber) -> GrassmannNumber:
    return a.soul


def parity(a: GrassmannNumber, atol: float = ATOL) -> int:
    return a.parity(atol)


def invert(a: GrassmannNumber, atol: float = ATOL) -> GrassmannNumber:
    """Inverse ``body^-1 * sum_k (-soul/body)^k``; the series stops by nilpotency."""
    b = a.body
    if abs(b) <= atol:
        raise ZeroBody(f"body {b!r} is zero; element is not invertible")
    n = a.soul * (-1.0 / b)
    term = GrassmannNumber.scalar(1.0, a.algebra)
    total = term
    # soul^5 = 0 even in the full algebra (4 generators)
    for _ in range(4):
        term = term * n
        if not term.coeffs.any():
            break
        total = total + term
    return total * (1.0 / b)


def project(a: GrassmannNumber, algebra: GrassmannAlgebra = QUOTIENT) -> GrassmannNumber:
    """Drop monomials that ``algebra`` does not contain."""
    c = np.zeros(algebra.dim, dtype=complex)
    for i, m in enumerate(a.algebra.masks):
        if m in algebra.index:
            c[algebra.index[m]] = a.coeffs[i]
    return GrassmannNumber(c, algebra)


def odd_parameter(terms, algebra: GrassmannAlgebra = QUOTIENT) -> GrassmannNumber:
    """Odd element from a generator-coefficient map or a single generator name.

    A complex coefficient pair ``[re, im]`` is accepted in place of a
    number so that JSON configs can be fed straight in.
    """
    if isinstance(terms, str):
        terms = {terms: 1.0}
    out = GrassmannNumber.scalar(0.0, algebra)
    for name, value in terms.items():
        if isinstance(value, (list, tuple)):
            value = complex(value[0], value[1])
        out = out + GrassmannNumber.generator(name, complex(value), algebra)
    return out


def taylor(a: GrassmannNumber, derivatives) -> GrassmannNumber:
    """``f(a) = sum_k f^(k)(body) soul^k / k!`` from the derivatives at the body.

    ``derivatives`` lists ``f(body), f'(body), ...``; five terms are always
    enough because the soul is nilpotent of order at most five.
    """
    s = a.soul
    term = GrassmannNumber.scalar(1.0, a.algebra)
    total = GrassmannNumber.scalar(0.0, a.algebra)
    fact = 1.0
    for k, d in enumerate(derivatives):
        if k:
            term = term * s
            fact *= k
            if not term.coeffs.any():
                break
        total = total + term * (d / fact)
    return total


def sin(a) -> GrassmannNumber | complex:
    """Sine of a complex number or an even Grassmann number."""
    if not isinstance(a, GrassmannNumber):
        return np.sin(a)
    b = a.body
    return taylor(a, [np.sin(b), np.cos(b), -np.sin(b), -np.cos(b), np.sin(b)])


def cos(a) -> GrassmannNumber | complex:
    if not isinstance(a, GrassmannNumber):
        return np.cos(a)
    b = a.body
    return taylor(a, [np.cos(b), -np.sin(b), -np.cos(b), np.sin(b), np.cos(b)])
