import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import hamiltonian_pbc_oracle, lax_oracle, r_matrix_closed_form, transfer_pbc_oracle
from polaron.bulk import (DEFAULT_ETAS, BadM, ModelParams, SingularAnisotropy, asymptotics_pbc,
                          check_h_log_derivative, check_r_properties, check_sqd_pbc, g,
                          hamiltonian_pbc, lax, monodromy_pbc, number_sectors, r21, r_matrix,
                          sqd_hat, sqd_pbc, sqd_pbc_defining, transfer_pbc, zeta)
from polaron.graded import (BF, GradedMatrix, embed, graded_permutation, local_operator,
                            number_operator, partial_super_transpose)
from polaron.spectrum import eigenfunction_extract
from polaron.trigpoly import DegreeTooSmall, interpolate_function, tp_asymptotic_leading

ETA = 0.3 + 0.1j
I4 = GradedMatrix.identity((BF, BF))
# eigenvalues of the N = 3 periodic transfer matrix at u = 0.4+0.1i, eta = 0.3+0.1i,
# frozen from the Jordan-Wigner oracle in tests/oracles.py
FROZEN_N3 = np.array([
    -1.3530258607664933 - 1.5848281293592972j, -1.0479563874234001 + 2.1492432389689187j,
    0.02349120979780646 + 0.11730595537779372j, 0.9372398699617253 - 1.1057163546070876j,
    1.1276518355997014 + 0.307616705305567j, 2.891220954781632 - 0.899987544626853j,
    3.488180239540255 - 0.9890471401946728j, 4.266246517297063 - 0.663247738485018j])

spectral = st.builds(complex, st.floats(-2, 2), st.floats(-0.5, 0.5))
anisotropy = st.builds(complex, st.floats(0.1, 1.4), st.floats(-0.3, 0.3))


def test_scalar_kernels():
    assert abs(g(0.0, ETA) - 1) < 1e-15
    assert abs(zeta(0.0, ETA) - 1) < 1e-15


def test_r_matrix_matches_display():
    for u in (0.1, 0.7 - 0.2j):
        np.testing.assert_allclose(r_matrix(u, ETA).body, r_matrix_closed_form(u, ETA), atol=0)


def test_singular_anisotropy():
    with pytest.raises(SingularAnisotropy):
        r_matrix(0.1, np.pi / 2)


def test_regularity():
    assert r_matrix(0.0, ETA).allclose(graded_permutation())


@given(spectral, anisotropy)
def test_unitarity(u, eta):
    R = r_matrix(u, eta)
    assert (R @ r21(r_matrix(-u, eta)) - zeta(u, eta) * I4).norm() < 1e-12 * max(1, abs(zeta(u, eta)))


def test_unitarity_50_points(rng):
    for _ in range(50):
        u = complex(rng.normal(), 0.3 * rng.normal())
        eta = complex(rng.uniform(0.1, 1.4), 0.2 * rng.normal())
        lhs = r_matrix(u, eta) @ r21(r_matrix(-u, eta))
        assert (lhs - zeta(u, eta) * I4).norm() < 1e-11


@given(spectral, anisotropy)
def test_periodicity(u, eta):
    sz2 = embed(local_operator("sz"), (1,), (BF, BF))
    assert (r_matrix(u + np.pi, eta) + sz2 @ r_matrix(u, eta) @ sz2).norm() < 1e-11


@given(spectral, spectral, anisotropy)
def test_yang_baxter(u, v, eta):
    F = [BF] * 3
    R = lambda x, pos: embed(r_matrix(x, eta), pos, F)
    lhs = R(u - v, (0, 1)) @ R(u, (0, 2)) @ R(v, (1, 2))
    rhs = R(v, (1, 2)) @ R(u, (0, 2)) @ R(u - v, (0, 1))
    assert (lhs - rhs).norm() < 1e-11 * max(1.0, lhs.norm())


@pytest.mark.parametrize("eta", DEFAULT_ETAS)
def test_property_battery(eta):
    rep = check_r_properties(eta, n_samples=100)
    assert rep.passed, rep.summary()


def test_crossing_at_zero():
    R0 = r21(r_matrix(-4 * ETA, ETA))
    cross = partial_super_transpose(R0, 1) @ partial_super_transpose(r21(r_matrix(0.0, ETA)), 0)
    assert (cross - zeta(2 * ETA, ETA) * I4).norm() < 1e-12


def test_lax_at_zero_is_permutation():
    N = 3
    F = [BF] * (N + 1)
    for j in range(1, N + 1):
        assert lax(0.0, j, N, ETA).allclose(embed(graded_permutation(), (0, j), F))


def test_lax_matches_oracle():
    for j in (1, 2, 3):
        np.testing.assert_allclose(lax(0.3 - 0.1j, j, 3, ETA).body, lax_oracle(0.3 - 0.1j, j, 3, ETA),
                                   atol=1e-14)


def test_monodromy_one_site_is_lax():
    assert monodromy_pbc(0.4, 1, ETA).allclose(lax(0.4, 1, 1, ETA))


def test_yang_baxter_algebra_two_sites(rng):
    N = 2
    F = [BF, BF] + [BF] * N
    for _ in range(3):
        u, v = rng.normal(size=2) + 0.1j
        T1 = embed(monodromy_pbc(u, N, ETA), (0, 2, 3), F)
        T2 = embed(monodromy_pbc(v, N, ETA), (1, 2, 3), F)
        R = embed(r_matrix(u - v, ETA), (0, 1), F)
        assert (R @ T1 @ T2 - T2 @ T1 @ R).norm() < 1e-12


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_transfer_matches_oracle(N):
    u = 0.41 - 0.23j
    np.testing.assert_allclose(transfer_pbc(u, N, ETA).body, transfer_pbc_oracle(u, N, ETA),
                               atol=1e-13)


def test_frozen_spectrum():
    ev = np.linalg.eigvals(transfer_pbc(0.4 + 0.1j, 3, ETA).body)
    ev = np.array(sorted(ev, key=lambda z: (z.real, z.imag)))
    np.testing.assert_allclose(ev, FROZEN_N3, atol=1e-12)


def test_commuting_family_four_sites(rng):
    for _ in range(20):
        u, v = rng.normal(size=2) * 0.6 + 0.2j * rng.normal(size=2)
        a, b = transfer_pbc(u, 4, ETA), transfer_pbc(v, 4, ETA)
        assert a.commutator(b).norm() < 1e-12


def test_transfer_is_degree_n_laurent_polynomial():
    N = 3
    entry = lambda u: transfer_pbc(u, N, ETA).body[3, 5]
    interpolate_function(entry, N)
    with pytest.raises(DegreeTooSmall):
        interpolate_function(lambda u: transfer_pbc(u, N, ETA).body.trace(), N - 1)


def test_number_conservation():
    Nop = number_operator(3)
    for u in (0.2, 0.7 + 0.3j):
        assert transfer_pbc(u, 3, ETA).commutator(Nop).norm() < 1e-13


def test_hamiltonian_two_sites_by_hand():
    V = -np.cos(2 * ETA)
    # basis BB, BF, FB, FF; the two bonds contribute twice
    H = np.array([[2 * V, 0, 0, 0], [0, 0, -2, 0], [0, -2, 0, 0], [0, 0, 0, 2 * V]])
    np.testing.assert_allclose(hamiltonian_pbc(2, ETA).body, H, atol=1e-15)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_hamiltonian_matches_jordan_wigner(N):
    np.testing.assert_allclose(hamiltonian_pbc(N, ETA).body, hamiltonian_pbc_oracle(N, ETA), atol=1e-14)


@pytest.mark.parametrize("N", [2, 3])
def test_log_derivative(N):
    rep = check_h_log_derivative(N, ETA)
    assert rep.passed, rep.summary()


def test_free_fermion_point():
    H = hamiltonian_pbc(3, np.pi / 4).body
    assert np.abs(np.diag(H)).max() < 1e-15


def test_sqd_single_site():
    sz = local_operator("sz")
    for u in (0.2, 0.5 - 0.3j):
        assert sqd_pbc(u, 1, ETA).allclose(zeta(u + 2 * ETA, ETA) * sz)
        assert sqd_pbc_defining(u, 1, ETA).allclose(zeta(u + 2 * ETA, ETA) * sz)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_sqd_closed_form(N):
    rep = check_sqd_pbc(N, ETA, n_samples=3)
    assert rep.passed, rep.summary()


def test_sqd_product_with_hat():
    N, u = 3, 0.3 + 0.2j
    prod = sqd_pbc(u, N, ETA) @ sqd_hat(u, N, ETA)
    ratio = zeta(u + 2 * ETA, ETA) ** N / zeta(u, ETA) ** N
    assert prod.allclose(ratio * GradedMatrix.identity([BF] * N))


def test_asymptotics_bad_m():
    with pytest.raises(BadM):
        asymptotics_pbc(2, 3, ETA)


@given(st.integers(1, 6), anisotropy)
def test_asymptotics_empty_and_full_sectors(N, eta):
    s = np.sin(2 * eta)
    E = np.exp(2j * eta)
    # the vacuum eigenvalue is a^N - b^N, the filled one b^N - (-a)^N
    vac = (E ** N - 1) / (2j * s) ** N
    full = (1 - (-1) ** N * E ** N) / (2j * s) ** N
    assert abs(asymptotics_pbc(N, 0, eta)[1] - vac) < 1e-10 * max(1, abs(vac))
    assert abs(asymptotics_pbc(N, N, eta)[1] - full) < 1e-10 * max(1, abs(full))


@given(st.integers(1, 6), anisotropy)
def test_asymptotics_particle_hole_sign(N, eta):
    pref = (np.exp(1j * eta) / (2j * np.sin(2 * eta))) ** N
    first = lambda M: pref * np.exp(1j * N * eta) * np.exp(-2j * M * eta)
    for M in range(N + 1):
        a = asymptotics_pbc(N, M, eta)[1]
        b = asymptotics_pbc(N, N - M, eta)[1]
        # the second term of sector M is the first term of sector N - M
        assert abs(a - (first(M) - (-1) ** M * first(N - M))) < 1e-10 * max(1.0, abs(a))
        if N % 2 == 0:
            assert abs(b + (-1) ** M * a) < 1e-10 * max(1.0, abs(a))


@pytest.mark.parametrize("N", [1, 2, 3])
def test_asymptotics_match_interpolated_eigenvalues(N):
    polys, basis = eigenfunction_extract(lambda u: transfer_pbc(u, N, ETA), N, grassmann=False)
    Ms = np.rint(np.real(np.diag(basis.left @ number_operator(N).body @ basis.right))).astype(int)
    for p, M in zip(polys, Ms):
        deg, pred = asymptotics_pbc(N, int(M), ETA)
        assert abs(p.coefficient(deg).body - pred) < 1e-10


def test_number_sectors():
    assert list(number_sectors(2)) == [0, 1, 1, 2]


def test_params_validation():
    from polaron.bulk import BadParams
    with pytest.raises(BadParams):
        ModelParams(0, ETA)
    with pytest.raises(BadParams):
        ModelParams(2, ETA, "open-ish")
    with pytest.raises(BadParams):
        ModelParams(2, ETA, "diagonal", psi_minus=0.0, psi_plus=0.3)
    p = ModelParams.open(2, ETA, 0.4, 0.5, alpha_m=0.2)
    assert p.boundary == "non-diagonal"
    assert ModelParams.open(2, ETA, 0.4, 0.5).boundary == "diagonal"
