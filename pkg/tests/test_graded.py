import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import fermions, super_trace_loop, super_tensor_loop
from polaron.graded import (BF, BadSite, BadSlot, GradedMatrix, NotSquare, embed, embed_site,
                            graded_permutation, local_operator, partial_super_trace,
                            partial_super_transpose, site_operator, super_tensor, super_trace,
                            super_transpose)

BFB = (0, 1, 0)


def rand_matrix(rng, factors, scale=1.0):
    d = int(np.prod([len(f) for f in factors]))
    return GradedMatrix(scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))), factors)


def homogeneous(rng, factors, parity):
    """Random body matrix whose nonzero entries all have ``p(row)+p(col) = parity``."""
    A = rand_matrix(rng, factors)
    from polaron.graded import flat_parity
    p = flat_parity(A.rows)
    mask = ((p[:, None] + p[None, :]) % 2) == parity
    return GradedMatrix(A.body * mask, factors)


seeds = st.integers(0, 2 ** 31 - 1)


def test_identity_tensor():
    I2 = GradedMatrix.identity((BF,))
    assert super_tensor(I2, I2).allclose(GradedMatrix.identity((BF, BF)))


@pytest.mark.parametrize("fa,fb", [(BF, BF), (BFB, BF), (BF, BFB)])
def test_super_tensor_matches_loop(rng, fa, fb):
    A, B = rand_matrix(rng, (fa,)), rand_matrix(rng, (fb,))
    np.testing.assert_allclose(super_tensor(A, B).body, super_tensor_loop(A.body, B.body, fa, fb),
                               atol=1e-14)


def test_embedded_odd_unit_sign_flip():
    e21 = GradedMatrix(np.array([[0, 0], [1, 0]]), (BF,))
    graded = super_tensor(e21, e21).body
    plain = np.kron(e21.body, e21.body)
    # (row, col) = (F F, B B): Koszul exponent (p(F)+p(B)) p(F) = 1
    assert graded[3, 0] == -plain[3, 0] == -1


@given(seeds)
def test_super_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (rand_matrix(rng, (BF,)) for _ in range(3))
    assert super_tensor(super_tensor(A, B), C).allclose(super_tensor(A, super_tensor(B, C)),
                                                        atol=1e-12)


@given(seeds, st.sampled_from([BF, BFB]))
def test_st_ist_inverse(seed, f):
    rng = np.random.default_rng(seed)
    A = rand_matrix(rng, (f,))
    assert partial_super_transpose(partial_super_transpose(A, 0, "st"), 0, "ist").allclose(A)
    assert partial_super_transpose(partial_super_transpose(A, 0, "ist"), 0, "st").allclose(A)


@given(seeds, st.integers(0, 1))
def test_st_ist_inverse_each_slot(seed, slot):
    rng = np.random.default_rng(seed)
    A = rand_matrix(rng, (BF, BF))
    B = partial_super_transpose(partial_super_transpose(A, slot, "st"), slot, "ist")
    assert B.allclose(A)


def test_st_is_not_an_involution(rng):
    A = homogeneous(rng, (BF,), 1)
    twice = partial_super_transpose(partial_super_transpose(A, 0), 0)
    assert not twice.allclose(A)
    assert twice.allclose(-A)


def test_partial_transposes_differ_from_total(rng):
    A = super_tensor(rand_matrix(rng, (BF,)), rand_matrix(rng, (BF,)))
    partial = partial_super_transpose(partial_super_transpose(A, 0), 1)
    assert not partial.allclose(super_transpose(A))


def test_bad_slot():
    with pytest.raises(BadSlot):
        partial_super_transpose(GradedMatrix.identity((BF,)), 3)


def test_super_trace_examples():
    assert super_trace(GradedMatrix.identity((BF,))).body == 0
    assert super_trace(local_operator("sz")).body == 2


def test_nested_partial_traces_equal_total(rng):
    A = rand_matrix(rng, (BF, BF))
    nested = partial_super_trace(partial_super_trace(A, 1), 0)
    assert nested.shape == (1, 1)
    total = super_trace(A).body
    assert abs(nested.body[0, 0] - total) < 1e-12
    assert abs(total - super_trace_loop(A.body, [0, 1, 1, 0])) < 1e-12


def test_partial_trace_not_square():
    A = GradedMatrix(np.zeros((2, 4)), (BF,), (BF, BF))
    with pytest.raises(NotSquare):
        super_trace(A)


@given(seeds)
def test_super_trace_cyclic_for_even_matrices(seed):
    rng = np.random.default_rng(seed)
    A, B = homogeneous(rng, (BF, BF), 0), homogeneous(rng, (BF, BF), 0)
    assert abs(super_trace(A @ B).body - super_trace(B @ A).body) < 1e-12


def test_permutation_entries():
    P = graded_permutation().body
    assert P[3, 3] == -1
    assert P[0, 0] == 1 and P[1, 2] == 1 and P[2, 1] == 1
    assert np.allclose(P @ P, np.eye(4))


@pytest.mark.parametrize("parities", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_permutation_swaps_factors(parities):
    rng = np.random.default_rng(sum(parities) + 3)
    P = graded_permutation()
    for _ in range(50):
        A = homogeneous(rng, (BF,), parities[0])
        B = homogeneous(rng, (BF,), parities[1])
        sign = (-1) ** (parities[0] * parities[1])
        assert (P @ super_tensor(A, B) @ P).allclose(sign * super_tensor(B, A), atol=1e-12)


def test_permutation_swaps_even_supermatrices(rng):
    """Odd blocks with odd Grassmann entries: the swap holds without sign."""
    from conftest import random_grassmann
    from polaron.grassmann import EVEN, ODD

    def even_super(rng):
        return GradedMatrix.from_entries(
            [[random_grassmann(rng, parity=EVEN), random_grassmann(rng, parity=ODD)],
             [random_grassmann(rng, parity=ODD), random_grassmann(rng, parity=EVEN)]], (BF,))

    P = graded_permutation()
    for _ in range(50):
        A, B = even_super(rng), even_super(rng)
        assert (P @ super_tensor(A, B) @ P).allclose(super_tensor(B, A), atol=1e-12)


def test_embed_identity():
    I = GradedMatrix.identity((BF,))
    assert embed_site(I, 2, 3).allclose(GradedMatrix.identity((BF,) * 3))


def test_embed_bad_site():
    with pytest.raises(BadSite):
        embed_site(local_operator("c"), 4, 3)


def test_embedded_fermions_anticommute():
    N = 3
    c = [site_operator("c", j, N) for j in range(1, N + 1)]
    cd = [site_operator("cdag", j, N) for j in range(1, N + 1)]
    assert (cd[0] @ cd[1] + cd[1] @ cd[0]).norm() == 0
    I = np.eye(2 ** N)
    for l in range(N):
        for k in range(N):
            anti = (cd[l] @ c[k] + c[k] @ cd[l]).body
            np.testing.assert_allclose(anti, I if l == k else 0 * I, atol=1e-15)


def test_embedding_matches_jordan_wigner():
    # the Koszul sign of a factor comes from the factors to its right
    N = 3
    c_jw, cd_jw = fermions(N, string="after")
    for j in range(N):
        np.testing.assert_allclose(site_operator("c", j + 1, N).body, c_jw[j])
        np.testing.assert_allclose(site_operator("cdag", j + 1, N).body, cd_jw[j])


def test_embed_reversed_positions_is_conjugation_by_permutation(rng):
    A = rand_matrix(rng, (BF, BF))
    P = graded_permutation()
    assert embed(A, (1, 0), (BF, BF)).allclose(P @ A @ P, atol=1e-12)
