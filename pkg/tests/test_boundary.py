import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import hamiltonian_obc_oracle, k_diag_oracle, monodromy_oracle, transfer_obc_diag_oracle
from polaron.boundary import (SingularZeta, check_commuting, check_conjugated_r,
                              check_hamiltonian_obc, check_obc_properties, check_reflection,
                              check_sqd_obc, conjugated_r, delta_k_minus, delta_k_minus_defining,
                              hamiltonian_obc, k_minus, k_plus, k_plus_from_minus, sqd_obc,
                              sqd_obc_defining, t_hat, transfer_obc)
from polaron.bulk import ModelParams, monodromy_pbc, r_matrix, zeta
from polaron.graded import BF, GradedMatrix, embed, local_operator, partial_super_transpose, super_trace
from polaron.grassmann import GENERATORS, QUOTIENT
from polaron.trigpoly import tp_asymptotic_leading
from polaron.bethe import ed_eigenfunctions

ETA = 0.3 + 0.1j
PSI = (0.4 + 0.2j, -0.7 + 0.1j)
ODD = dict(alpha_m=0.3, beta_m=-0.2 + 0.1j, alpha_p=0.5, beta_p=0.7)
sz = local_operator("sz")


def nondiag(N, eta=ETA):
    return ModelParams.open(N, eta, *PSI, **ODD)


def diag(N, eta=ETA):
    return ModelParams.open(N, eta, *PSI)


def test_k_normalisation():
    p = nondiag(1)
    assert k_minus(0.0, p).allclose(GradedMatrix.identity((BF,)))
    st = super_trace(k_plus(0.0, p))
    assert abs(st.body - 1) < 1e-14 and st.soul.norm() < 1e-14


def test_k_diagonal_entries_match_display(rng):
    p = diag(1)
    for u in rng.normal(size=5) + 0.1j:
        Km, Kp = k_diag_oracle(u, ETA, *PSI)
        np.testing.assert_allclose(k_minus(u, p).body, Km, atol=1e-14)
        np.testing.assert_allclose(k_plus(u, p).body, Kp, atol=1e-14)


def test_k_off_diagonal_is_grassmann():
    p = nondiag(1)
    u = 0.3
    K = k_minus(u, p)
    assert K.entry(0, 1).allclose(p.alpha_m * (np.sin(2 * u) / np.sin(PSI[0])))
    assert K.entry(1, 0).allclose(p.beta_m * (np.sin(2 * u) / np.sin(PSI[0])))


def test_k_periodicity(rng):
    p = nondiag(1)
    for u in rng.normal(size=5):
        for K in (k_minus, k_plus):
            assert (K(u + np.pi, p) + sz @ K(u, p) @ sz).norm() < 1e-13


def test_k_plus_from_duality(rng):
    p = nondiag(1)
    for u in rng.normal(size=20) + 0.2j * rng.normal(size=20):
        assert k_plus_from_minus(u, p).allclose(k_plus(u, p), atol=1e-12)


@pytest.mark.parametrize("boundary", ["diagonal", "non-diagonal"])
def test_reflection(boundary):
    p = diag(1) if boundary == "diagonal" else nondiag(1)
    rep = check_reflection(p, n_samples=50)
    assert rep.passed, rep.summary()


def test_conjugated_r_forms():
    rep = check_conjugated_r(ETA)
    assert rep.passed, rep.summary()
    s1 = embed(sz, (0,), (BF, BF))
    R = r_matrix(0.27, ETA)
    assert conjugated_r(0.27, ETA).allclose(s1 @ R @ s1)
    assert conjugated_r(0.27, ETA).allclose(partial_super_transpose(partial_super_transpose(R, 0), 0))
    assert not conjugated_r(0.0, ETA).allclose(r_matrix(0.0, ETA))


@pytest.mark.parametrize("N", [1, 2, 3])
def test_t_hat_is_inverse(N, rng):
    u = complex(rng.normal(), 0.2)
    prod = monodromy_pbc(-u, N, ETA) @ t_hat(u, N, ETA)
    assert prod.allclose(GradedMatrix.identity([BF] * (N + 1)), atol=1e-12)
    np.testing.assert_allclose(t_hat(u, N, ETA).body, np.linalg.inv(monodromy_oracle(-u, N, ETA)),
                               atol=1e-12)


def test_t_hat_single_site():
    u = 0.31
    R10 = embed(r_matrix(u, ETA), (1, 0), (BF, BF))
    assert t_hat(u, 1, ETA).allclose(R10 * (1 / zeta(u, ETA)))


def test_t_hat_pole():
    # zeta(u) = 0 at u = 2 eta
    with pytest.raises(SingularZeta):
        t_hat(2 * ETA, 2, ETA)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_transfer_matches_direct_inverse_oracle(N, rng):
    for u in rng.normal(size=3) * 0.6 + 0.1j:
        np.testing.assert_allclose(transfer_obc(u, diag(N)).body,
                                   transfer_obc_diag_oracle(u, N, ETA, *PSI), atol=1e-12)


def test_tau_at_zero_is_identity():
    assert transfer_obc(0.0, nondiag(3)).allclose(GradedMatrix.identity([BF] * 3), atol=1e-12)


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("kind", ["diagonal", "non-diagonal"])
def test_property_battery(N, kind):
    p = diag(N) if kind == "diagonal" else nondiag(N)
    rep = check_obc_properties(p)
    assert rep.passed, rep.summary()


def test_tau_odd_coefficients_only_on_parity_changing_entries():
    t = transfer_obc(0.37 + 0.1j, nondiag(2))
    assert t.even_operator_defect() < 1e-14
    assert t.grassmann_odd_part().norm() > 0


def test_eigenvalue_asymptotics_orders(rng):
    # the odd invariant drives the z^4 law of tau, diagonal chains grow like z^2
    for p, deg in ((nondiag(1), 6), (diag(1), 4)):
        polys, _ = ed_eigenfunctions(p)
        assert max(tp_asymptotic_leading(q, 1e-9)[0] for q in polys) == deg
    polys, _ = ed_eigenfunctions(nondiag(1))
    lead = polys[0].coefficient(6)
    X = nondiag(1).odd_invariant
    ratio = lead.coeffs[np.argmax(np.abs(X.coeffs))] / X.coeffs[np.argmax(np.abs(X.coeffs))]
    assert (lead - X * ratio).norm() < 1e-10


@pytest.mark.parametrize("N", [1, 2, 3])
def test_hamiltonian_matches_assembly(N):
    p = nondiag(N)
    H = hamiltonian_obc(p)
    ref = hamiltonian_obc_oracle(N, ETA, *PSI, ODD)
    np.testing.assert_allclose(H.body, ref["1"], atol=1e-14)
    for name in GENERATORS:
        np.testing.assert_allclose(H.data[QUOTIENT.index[1 << GENERATORS.index(name)]], ref[name],
                                   atol=1e-14)


def test_hamiltonian_diagonal_reduces_to_chemical_potentials():
    H = hamiltonian_obc(diag(2))
    assert H.is_scalar()
    ref = hamiltonian_obc_oracle(2, ETA, *PSI)
    np.testing.assert_allclose(H.body, ref["1"], atol=1e-14)


def test_hamiltonian_odd_terms_once_per_edge_site():
    H = hamiltonian_obc(nondiag(3))
    for name, site in (("alpha_m", 0), ("beta_m", 0), ("alpha_p", 2), ("beta_p", 2)):
        m = H.data[QUOTIENT.index[1 << GENERATORS.index(name)]]
        assert np.count_nonzero(np.abs(m) > 1e-14) == 4  # one c or c^dag on 8 states


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("kind", ["diagonal", "non-diagonal"])
def test_derivative_identity(N, kind):
    p = diag(N) if kind == "diagonal" else nondiag(N)
    rep = check_hamiltonian_obc(p)
    assert rep.passed, rep.summary()


def test_sqd_independent_of_odd_parameters(rng):
    for u in rng.normal(size=5):
        assert sqd_obc(u, nondiag(2)).allclose(sqd_obc(u, diag(2)), atol=1e-12)


def test_delta_k_minus_formula(rng):
    p = nondiag(1)
    for u in rng.normal(size=5) + 0.1j:
        assert delta_k_minus_defining(u, p).allclose(delta_k_minus(u, p), atol=1e-12)


def test_sqd_defining_single_site(rng):
    p = nondiag(1)
    res = []
    for u in rng.normal(size=10) * 0.6 + 0.1j:
        D = sqd_obc(u, p)
        X = sqd_obc_defining(u, p)
        res.append((X + GradedMatrix.identity(X.rows) * D).norm() / max(1.0, abs(D.body)))
    assert max(res) < 1e-12


@pytest.mark.parametrize("N", [1, 2])
def test_sqd_report(N):
    rep = check_sqd_obc(nondiag(N), n_samples=3)
    assert rep.passed, rep.summary()


@given(st.floats(0.15, 1.3), st.floats(-0.2, 0.2))
def test_commuting_two_sites_any_eta(re, im):
    eta = complex(re, im)
    if abs(np.cos(2 * eta)) < 1e-2:
        return
    rep = check_commuting(nondiag(2, eta), n_pairs=3)
    assert rep.passed, rep.summary()


def test_commuting_reports_absolute_value():
    rep = check_commuting(nondiag(2), n_pairs=4)
    ids = [c.identity for c in rep.checks]
    assert "[tau(u), tau(v)] absolute" in ids
    assert rep.passed
