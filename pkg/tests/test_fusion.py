import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import A12_PRINTED, fused_r2_printed
from polaron.bulk import ModelParams, r_matrix, transfer_pbc, zeta
from polaron.fusion import (BlockLeakage, a_coefficient, check_fused_k, check_fused_r,
                            check_hierarchy_obc, check_hierarchy_pbc, check_truncation_k,
                            check_truncation_obc, check_truncation_pbc, check_truncation_r,
                            eta_root, fused_k, fused_r, fused_sigma_z, fused_signature,
                            fused_transfer_obc, fused_transfer_pbc, load_fusion_basis, projector_plus,
                            projector_pm_pair, q_integer, script_m, triangularity_residual)
from polaron.boundary import k_minus, k_plus, transfer_obc
from polaron.graded import BF, GradedMatrix, sigma_z_string

ETA = 0.3 + 0.1j
PSI = (0.4 + 0.2j, -0.7 + 0.1j)
ODD = dict(alpha_m=0.3, beta_m=-0.2 + 0.1j, alpha_p=0.5, beta_p=0.7)


def nondiag(N, eta=ETA):
    return ModelParams.open(N, eta, *PSI, **ODD)


def diag(N, eta=ETA):
    return ModelParams.open(N, eta, *PSI)


def test_projector_pair_algebra():
    Pp, Pm = projector_pm_pair(ETA)
    I = GradedMatrix.identity((BF, BF))
    assert (Pp @ Pp).allclose(Pp)
    assert (Pp @ Pm).norm() < 1e-15
    assert (Pp + Pm).allclose(I)


def test_projector_is_not_r_at_second_singularity():
    assert not projector_plus(2).allclose(r_matrix(2 * ETA, ETA) * 0.5)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_projector_idempotent(n):
    P = projector_plus(n)
    assert (P @ P).allclose(P)
    assert abs(np.trace(P.body) - (n + 1)) < 1e-12


def test_triangularity(rng):
    us = rng.normal(size=30) + 0.2j * rng.normal(size=30)
    assert max(triangularity_residual(u, ETA) for u in us) < 1e-12


def test_a12_matches_printed():
    np.testing.assert_allclose(load_fusion_basis(2).A, A12_PRINTED, atol=1e-15)


def test_a_coefficient_level_two():
    assert abs(q_integer(2, np.pi / 6) - 1) < 1e-15
    assert abs(a_coefficient(2) - 2 / np.sqrt(3)) < 1e-15


def test_b_diagonal_level_three():
    a3 = a_coefficient(3)
    np.testing.assert_allclose(load_fusion_basis(3).B, [a3, 1, 1, a3])
    np.testing.assert_allclose(load_fusion_basis(3).C, [a3, 1, 1, 1])


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_basis_sources(n):
    basis = load_fusion_basis(n)
    assert basis.source == ("constructed" if n == 5 else "asset")
    assert basis.signature == fused_signature(n)


def test_signature_table():
    assert fused_signature(2) == (0, 1, 0)
    assert fused_signature(3) == (0, 1, 0, 1)


@pytest.mark.parametrize("u", [0.3, 0.7 + 0.2j, -1.1 + 0.05j])
def test_two_copy_fused_r_proportional_to_display(u):
    F = fused_r(2, u, ETA).body
    P = fused_r2_printed(u, ETA)
    mask = np.abs(P) > 0
    ratio = F[mask] / P[mask]
    assert np.ptp(ratio.real) < 1e-12 and np.ptp(ratio.imag) < 1e-12
    assert np.abs(F[~mask]).max() < 1e-14


@pytest.mark.parametrize("eta", [ETA, 0.37])
def test_fused_r_report(eta):
    rep = check_fused_r(eta, levels=(2, 3), n_samples=3)
    assert rep.passed, rep.summary()


def test_fused_sigma_z_is_alternating():
    np.testing.assert_allclose(np.diag(fused_sigma_z(3).body), [1, -1, 1, -1])


def test_block_leakage_is_detected():
    from polaron.fusion import _reduce
    X = GradedMatrix(np.random.default_rng(0).normal(size=(8, 8)), [BF] * 3)
    with pytest.raises(BlockLeakage):
        _reduce(X, 2, [BF], "random")


def test_level_zero_is_transfer_matrix():
    assert fused_transfer_pbc(0, 0.3, 2, ETA).allclose(transfer_pbc(0.3, 2, ETA))
    assert fused_transfer_pbc(-1, 0.3, 2, ETA).allclose(GradedMatrix.identity([BF] * 2))


def test_hierarchy_pbc_two_sites():
    rep = check_hierarchy_pbc(2, ETA, levels=(0, 1, 2), n_samples=10)
    assert rep.passed, rep.summary()


def test_hierarchy_pbc_sign_sectors_single_site():
    # in the diagonal basis delta acts as -(-1)^(N+M) zeta^N(u+2eta)
    rep = check_hierarchy_pbc(1, ETA, levels=(0, 1))
    assert rep.passed
    assert rep.worst("quantum determinant sector signs") < 1e-12


@pytest.mark.parametrize("kind", ["diagonal", "non-diagonal"])
def test_fused_k_report(kind):
    p = diag(1) if kind == "diagonal" else nondiag(1)
    rep = check_fused_k(p, levels=(2, 3))
    assert rep.passed, rep.summary()


def test_level_one_fused_k_is_bare():
    p = nondiag(1)
    assert fused_k(1, 0.4, p, "minus").allclose(k_minus(0.4, p))
    assert fused_k(1, 0.4, p, "plus").allclose(k_plus(0.4, p))


def test_open_level_one_is_transfer():
    p = nondiag(1)
    assert fused_transfer_obc(1, 0.3, p).allclose(transfer_obc(0.3, p))


def test_hierarchy_obc_single_site_diagonal():
    rep = check_hierarchy_obc(diag(1), levels=(1,), n_samples=3)
    assert rep.passed, rep.summary()
    assert rep.worst("rescaled hierarchy n=1") < 1e-10


def test_hierarchy_obc_grassmann_two_sites():
    rep = check_hierarchy_obc(nondiag(2), levels=(1, 2), n_samples=2)
    assert rep.passed, rep.summary()


def test_script_m():
    p = 2
    s = np.sin(2 * eta_root(p))
    assert abs(script_m(p, 0.3) - (0.5 / s) ** p * np.sin(3 * 0.3) / s) < 1e-15


@pytest.mark.parametrize("p", [1, 2, 3])
def test_truncation_r(p):
    rep = check_truncation_r(p)
    assert rep.passed, rep.summary()


@pytest.mark.parametrize("p,N", [(1, 1), (2, 2), (3, 1)])
def test_truncation_pbc(p, N):
    rep = check_truncation_pbc(p, N)
    assert rep.passed, rep.summary()


def test_truncation_sign_depends_on_p():
    """The (-1)^p factor matters: flipping it breaks the identity."""
    for p in (1, 2):
        e, N, u = eta_root(p), 2, 0.37 + 0.1j
        M = script_m(p, u)
        sz, szp = sigma_z_string(N), sigma_z_string(N, p)
        lhs = fused_transfer_pbc(p, u, N, e)
        tail = (sz @ fused_transfer_pbc(p - 2, u + 2 * e, N, e)) * zeta(u, e) ** N
        good = sz * (-M) ** N - szp * ((-1) ** p * M ** N) - tail
        bad = sz * (-M) ** N + szp * ((-1) ** p * M ** N) - tail
        assert (lhs - good).norm() < 1e-10
        assert (lhs - bad).norm() > 1e-3


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("kind", ["diagonal", "non-diagonal"])
def test_truncation_k(n, kind):
    p = diag(1) if kind == "diagonal" else nondiag(1)
    rep = check_truncation_k(p, n)
    assert rep.passed, rep.summary()


@pytest.mark.parametrize("n", [2, 3])
def test_truncation_obc_single_site(n):
    rep = check_truncation_obc(nondiag(1), n)
    assert rep.passed, rep.summary()


@given(st.floats(-1.0, 1.0), st.floats(-0.3, 0.3))
def test_fused_levels_commute(re, im):
    u, v = complex(re, im), complex(0.41, -0.1)
    a, b = fused_transfer_pbc(1, u, 2, ETA), fused_transfer_pbc(2, v, 2, ETA)
    assert a.commutator(b).norm() < 1e-10 * max(1.0, a.norm() * b.norm())
