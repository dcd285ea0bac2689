"""Laurent polynomials in ``z = exp(iu)`` with Grassmann coefficients.

Transfer-matrix eigenvalues and Q-functions are trigonometric polynomials in
the spectral parameter.  :class:`TrigPoly` stores them exactly as a
coefficient array ``coeffs[m, k + d]`` (Grassmann monomial ``m``, power
``z^k`` with ``-d <= k <= d``) and recovers them from samples by
interpolation on perturbed discrete-Fourier nodes.
"""
from __future__ import annotations

from numbers import Number
from typing import Callable, Iterable

import numpy as np

from .grassmann import QUOTIENT, GrassmannAlgebra, GrassmannNumber


class IllConditioned(np.linalg.LinAlgError):
    pass


class DegreeTooSmall(ValueError):
    """The held-out samples are not reproduced at the requested degree."""


class ZeroPoly(ValueError):
    pass


class TrigPoly:
    """``sum_{k=-d}^{d} c_k z^k`` with ``c_k`` in a Grassmann algebra."""

    __slots__ = ("coeffs", "d", "algebra")
    __array_ufunc__ = None

    def __init__(self, coeffs, algebra: GrassmannAlgebra = QUOTIENT):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 1:
            full = np.zeros((algebra.dim, c.size), dtype=complex)
            full[0] = c
            c = full
        if c.shape[0] != algebra.dim or c.shape[1] % 2 != 1:
            raise ValueError(f"coefficient array of shape {c.shape} is not (dim, 2d+1)")
        self.coeffs = c
        self.d = (c.shape[1] - 1) // 2
        self.algebra = algebra

    # -- construction -------------------------------------------------
    @classmethod
    def monomial(cls, k: int, coeff=1.0, algebra: GrassmannAlgebra = QUOTIENT) -> "TrigPoly":
        d = abs(k)
        c = np.zeros((algebra.dim, 2 * d + 1), dtype=complex)
        if isinstance(coeff, GrassmannNumber):
            c[:, k + d] = coeff.coeffs
        else:
            c[0, k + d] = coeff
        return cls(c, algebra)

    @classmethod
    def constant(cls, value, algebra: GrassmannAlgebra = QUOTIENT) -> "TrigPoly":
        return cls.monomial(0, value, algebra)

    @classmethod
    def sin(cls, shift=0.0, algebra: GrassmannAlgebra = QUOTIENT) -> "TrigPoly":
        """``sin(u + shift) = (e^{i shift} z - e^{-i shift} / z) / 2i``."""
        e = np.exp(1j * shift)
        return cls(np.array([-1 / e, 0.0, e]) / 2j, algebra)

    @classmethod
    def cos(cls, shift=0.0, algebra: GrassmannAlgebra = QUOTIENT) -> "TrigPoly":
        e = np.exp(1j * shift)
        return cls(np.array([1 / e, 0.0, e]) / 2, algebra)

    # -- evaluation ---------------------------------------------------
    def powers(self) -> np.ndarray:
        return np.arange(-self.d, self.d + 1)

    def eval_array(self, u) -> np.ndarray:
        """Coefficient vector (per monomial) of the value at ``u``."""
        return self.coeffs @ np.exp(1j * self.powers() * u)

    def __call__(self, u) -> GrassmannNumber:
        return GrassmannNumber(self.eval_array(u), self.algebra)

    def body_values(self, us) -> np.ndarray:
        us = np.asarray(us)
        return np.exp(1j * np.multiply.outer(us, self.powers())) @ self.coeffs[0]

    # -- arithmetic ---------------------------------------------------
    def _pad(self, d: int) -> np.ndarray:
        if d == self.d:
            return self.coeffs
        out = np.zeros((self.algebra.dim, 2 * d + 1), dtype=complex)
        out[:, d - self.d:d + self.d + 1] = self.coeffs
        return out

    def _coerce(self, other):
        if isinstance(other, TrigPoly):
            return other
        if isinstance(other, (Number, GrassmannNumber)):
            return TrigPoly.constant(other, self.algebra)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = max(self.d, other.d)
        return TrigPoly(self._pad(d) + other._pad(d), self.algebra)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(-self.coeffs, self.algebra)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return TrigPoly(self.coeffs * other, self.algebra)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = self.d + other.d
        out = np.zeros((self.algebra.dim, 2 * d + 1), dtype=complex)
        for i, j, k, s in self.algebra.table:
            a, b = self.coeffs[i], other.coeffs[j]
            if a.any() and b.any():
                out[k] += s * np.convolve(a, b)
        return TrigPoly(out, self.algebra)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return TrigPoly(self.coeffs * other, self.algebra)
        if isinstance(other, GrassmannNumber):
            return TrigPoly.constant(other, self.algebra) * self
        return NotImplemented

    def __pow__(self, n: int):
        out = TrigPoly.constant(1.0, self.algebra)
        for _ in range(n):
            out = out * self
        return out

    def shift(self, a) -> "TrigPoly":
        """``p(u + a)``."""
        return TrigPoly(self.coeffs * np.exp(1j * self.powers() * a)[None, :], self.algebra)

    def trim(self, atol: float = 0.0) -> "TrigPoly":
        """Drop vanishing outer coefficients symmetrically."""
        k = self.d
        while k > 0 and np.abs(self.coeffs[:, [0 + self.d - k, self.d + k]]).max() <= atol:
            k -= 1
        return TrigPoly(self.coeffs[:, self.d - k:self.d + k + 1], self.algebra)

    def coefficient(self, k: int) -> GrassmannNumber:
        if abs(k) > self.d:
            return GrassmannNumber.scalar(0.0, self.algebra)
        return GrassmannNumber(self.coeffs[:, k + self.d], self.algebra)

    def allclose(self, other, atol: float = 1e-12) -> bool:
        d = max(self.d, other.d)
        return bool(np.abs(self._pad(d) - other._pad(d)).max() <= atol)

    def __repr__(self):
        return f"TrigPoly(d={self.d}, body={np.round(self.coeffs[0], 6)})"


def tp_eval(p: TrigPoly, u) -> GrassmannNumber:
    return p(u)


# -- interpolation ------------------------------------------------------------

def fourier_nodes(n: int, offset: float = 0.1234, imag: float = 0.0) -> np.ndarray:
    """``n`` equally spaced points on a circle ``|z| = exp(-imag)``."""
    return offset + 2 * np.pi * np.arange(n) / n + 1j * imag


def avoid_poles(nodes, poles: Iterable[Callable] | None, radius: float = 1e-3,
                step: float = 7.3e-3) -> np.ndarray:
    """Nudge nodes along the real axis until every pole function exceeds ``radius``.

    ``poles`` holds callables ``f(u)`` whose zeros are dangerous, e.g.
    ``lambda u: sin(2u + 2 eta)``.
    """
    nodes = np.array(nodes, dtype=complex)
    if not poles:
        return nodes
    for i, u in enumerate(nodes):
        for _ in range(100):
            if all(abs(f(u)) > radius for f in poles):
                break
            u = u + step
        nodes[i] = u
    return nodes


def _as_coeff_vector(value, algebra) -> np.ndarray:
    if isinstance(value, GrassmannNumber):
        return value.coeffs
    c = np.zeros(algebra.dim, dtype=complex)
    c[0] = value
    return c


def tp_interpolate(samples, d: int, holdout=None, tol: float = 1e-9,
                   algebra: GrassmannAlgebra = QUOTIENT, max_cond: float = 1e8) -> TrigPoly:
    """Degree-``d`` Laurent polynomial through ``samples = [(u, value), ...]``.

    Exactly ``2d+1`` samples give square interpolation; more are fitted by
    least squares.  ``holdout`` (same format) is used for validation and must
    be reproduced to ``tol`` relative to the sample scale.

    Raises
    ------
    IllConditioned
        if the Vandermonde system has condition number above ``max_cond``.
    DegreeTooSmall
        if the held-out residual exceeds ``tol``.
    """
    us = np.array([s[0] for s in samples], dtype=complex)
    vals = np.stack([_as_coeff_vector(s[1], algebra) for s in samples])
    if us.size < 2 * d + 1:
        raise IllConditioned(f"{us.size} samples cannot fix {2 * d + 1} coefficients")
    V = np.exp(1j * np.multiply.outer(us, np.arange(-d, d + 1)))
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > max_cond:
        raise IllConditioned(f"Vandermonde condition number {cond:.2e}")
    sol, *_ = np.linalg.lstsq(V, vals, rcond=None)
    p = TrigPoly(sol.T, algebra)
    scale = max(1.0, float(np.abs(vals).max()))
    checks = list(holdout or [])
    if us.size > 2 * d + 1:
        checks += list(samples)
    for u, v in checks:
        err = float(np.abs(p.eval_array(u) - _as_coeff_vector(v, algebra)).max())
        if err > tol * scale:
            raise DegreeTooSmall(f"held-out residual {err:.2e} at u={u} exceeds tolerance")
    return p


def interpolate_function(f: Callable, d: int, poles=None, tol: float = 1e-9,
                         imag: float = 0.0, n_holdout: int = 3,
                         algebra: GrassmannAlgebra = QUOTIENT) -> TrigPoly:
    """Sample ``f`` on pole-avoiding Fourier nodes and interpolate at degree ``d``."""
    nodes = avoid_poles(fourier_nodes(2 * d + 1, imag=imag), poles)
    extra = avoid_poles(fourier_nodes(n_holdout, offset=0.5771, imag=imag + 0.05), poles)
    return tp_interpolate([(u, f(u)) for u in nodes], d,
                          holdout=[(u, f(u)) for u in extra], tol=tol, algebra=algebra)


def tp_asymptotic_leading(p: TrigPoly, atol: float = 1e-12) -> tuple[int, GrassmannNumber]:
    """Highest power with a nonzero coefficient (any monomial) and that coefficient.

    Raises
    ------
    ZeroPoly
        if every coefficient is below ``atol``.
    """
    mags = np.abs(p.coeffs).max(axis=0)
    nz = np.flatnonzero(mags > atol)
    if nz.size == 0:
        raise ZeroPoly("polynomial vanishes identically")
    k = int(nz[-1]) - p.d
    return k, p.coefficient(k)
