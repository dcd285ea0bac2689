import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_grassmann
from polaron.bulk import transfer_pbc
from polaron.spectrum import eigenfunction_extract
from polaron.trigpoly import (DegreeTooSmall, IllConditioned, TrigPoly, ZeroPoly, avoid_poles,
                              fourier_nodes, interpolate_function, tp_asymptotic_leading, tp_eval,
                              tp_interpolate)

seeds = st.integers(0, 2 ** 31 - 1)


def random_poly(rng, d, grassmann=False):
    n = 2 * d + 1
    if grassmann:
        c = rng.normal(size=(9, n)) + 1j * rng.normal(size=(9, n))
    else:
        c = rng.normal(size=n) + 1j * rng.normal(size=n)
    return TrigPoly(c)


def test_eval_monomial():
    assert tp_eval(TrigPoly.monomial(1), 0.0).body == 1


def test_sin_at_half_pi():
    assert abs(tp_eval(TrigPoly.sin(), np.pi / 2).body - 1) < 1e-15


def test_shifted_sine_matches_trig(rng):
    eta = 0.3 + 0.1j
    p = TrigPoly.sin(2 * eta) * (1 / np.sin(2 * eta))
    for u in rng.normal(size=20) + 1j * rng.normal(size=20) * 0.3:
        assert abs(tp_eval(p, u).body - np.sin(u + 2 * eta) / np.sin(2 * eta)) < 1e-13


def test_constant_interpolation():
    samples = [(u, 2.5) for u in fourier_nodes(5)]
    p = tp_interpolate(samples, 2).trim(1e-12)
    assert p.d == 0
    assert abs(p.coefficient(0).body - 2.5) < 1e-13


def test_sine_interpolation():
    p = interpolate_function(np.sin, 1)
    assert abs(p.coefficient(1).body - 1 / 2j) < 1e-13
    assert abs(p.coefficient(-1).body + 1 / 2j) < 1e-13


def test_round_trip_degree_six(rng):
    p = random_poly(rng, 6, grassmann=True)
    us = fourier_nodes(13)
    q = tp_interpolate([(u, p(u)) for u in us], 6)
    assert np.abs(q.coeffs - p.coeffs).max() < 1e-10


def test_degree_too_small_detected(rng):
    p = random_poly(rng, 4)
    with pytest.raises(DegreeTooSmall):
        interpolate_function(lambda u: p(u).body, 2)


def test_ill_conditioned():
    us = [0.1, 0.1 + 1e-12, 0.5]
    with pytest.raises(IllConditioned):
        tp_interpolate([(u, 1.0) for u in us], 1)


def test_avoid_poles_moves_nodes():
    eta = 0.3
    f = lambda u: np.sin(2 * u + 2 * eta)
    nodes = avoid_poles([-eta, 0.4], [f], radius=1e-3)
    assert all(abs(f(u)) > 1e-3 for u in nodes)
    assert nodes[1] == 0.4


def test_leading_examples():
    p = TrigPoly.monomial(2) + 3
    d, c = tp_asymptotic_leading(p)
    assert d == 2 and c.allclose(TrigPoly.constant(1).coefficient(0))
    with pytest.raises(ZeroPoly):
        tp_asymptotic_leading(TrigPoly.constant(0))


def test_pbc_eigenvalue_degree_two():
    polys, _ = eigenfunction_extract(lambda u: transfer_pbc(u, 2, 0.3 + 0.1j), 2, grassmann=False)
    assert max(tp_asymptotic_leading(p, 1e-9)[0] for p in polys) == 2


@given(seeds, st.integers(0, 4), st.integers(0, 4))
def test_ring_laws_pointwise(seed, d1, d2):
    rng = np.random.default_rng(seed)
    p, q = random_poly(rng, d1, True), random_poly(rng, d2, True)
    u = complex(rng.normal(), 0.3 * rng.normal())
    assert ((p * q)(u) - p(u) * q(u)).norm() < 1e-12 * max(1.0, (p(u) * q(u)).norm()) * 10
    assert ((p + q)(u) - (p(u) + q(u))).norm() < 1e-12 * max(1.0, p(u).norm() + q(u).norm())
    assert (p * q).d == d1 + d2


@given(seeds, st.integers(1, 5), st.floats(0.0, 6.0))
def test_interpolation_independent_of_nodes(seed, d, offset):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, d)
    us = fourier_nodes(2 * d + 1, offset=offset)
    q = tp_interpolate([(u, p(u)) for u in us], d)
    assert np.abs(q.coeffs - p.coeffs).max() < 1e-10


def test_shift(rng):
    p = random_poly(rng, 3, True)
    u = 0.37 + 0.1j
    assert (p.shift(0.2)(u) - p(u + 0.2)).norm() < 1e-12
    x = random_grassmann(rng)
    assert ((p * x)(u) - p(u) * x).norm() < 1e-11
