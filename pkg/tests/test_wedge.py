import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoflow import wedge as W
from holoflow.errors import InvalidInput, InvalidMetric, PreconditionViolated
from holoflow.holonomy import projection_pair
from conftest import random_endo, random_orthogonal, random_two_form, so2_so2, u2, conjugate

seeds = st.integers(0, 2**31 - 1)


def test_basis_is_orthonormal():
    for n in (2, 3, 5):
        phi = W.basis(n)
        gram = W.inner(phi[:, None], phi[None, :])
        assert np.allclose(gram, np.eye(W.dim_wedge2(n)), atol=1e-15)


def test_vec_round_trip(rng):
    w = random_two_form(5, rng)
    assert np.allclose(W.from_vec(W.to_vec(w)), w)
    with pytest.raises(InvalidInput):
        W.from_vec(np.zeros(4))


def test_bracket_example():
    w, e = W.e_wedge(0, 1, 3), W.e_wedge(1, 2, 3)
    assert np.allclose(W.bracket(w, e), 0.5 * W.e_wedge(0, 2, 3), atol=1e-15)


def test_bracket_with_itself_vanishes(rng):
    w = random_two_form(4, rng)
    assert np.max(np.abs(W.bracket(w, w))) == 0.0


@pytest.mark.parametrize("n", [3, 4, 5])
def test_jacobi(n, rng):
    for _ in range(100):
        a, b, c = (random_two_form(n, rng) for _ in range(3))
        j = W.bracket(W.bracket(a, b), c) + W.bracket(W.bracket(b, c), a) + W.bracket(W.bracket(c, a), b)
        assert np.max(np.abs(j)) < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_bracket_is_matrix_commutator(n, rng):
    a, b = random_two_form(n, rng), random_two_form(n, rng)
    assert np.allclose(W.bracket(a, b), a @ b - b @ a, atol=1e-13)


def test_bracket_with_metric_matches_formula(rng):
    n = 4
    w, e = random_two_form(n, rng), random_two_form(n, rng)
    A = rng.standard_normal((n, n))
    g = A @ A.T + n * np.eye(n)
    gi = np.linalg.inv(g)
    expected = np.zeros((n, n))
    for i, j, k, l in itertools.product(range(n), repeat=4):
        expected[i, j] += gi[k, l] * (w[i, k] * e[l, j] - w[j, k] * e[l, i])
    assert np.allclose(W.bracket(w, e, g), expected, atol=1e-12)


def test_bracket_errors():
    with pytest.raises(InvalidInput):
        W.bracket(np.zeros((3, 3)), np.zeros((4, 4)))
    with pytest.raises(InvalidMetric):
        W.bracket(np.zeros((3, 3)), np.zeros((3, 3)), -np.eye(3))


def test_structure_constants_antisymmetric_and_invariant():
    for n in (3, 4, 5):
        C = W.structure_constants(n)
        assert np.allclose(C, -np.swapaxes(C, 0, 1), atol=1e-15)
        # <[X,Y],Z> is fully antisymmetric
        assert np.allclose(C, -np.swapaxes(C, 1, 2), atol=1e-15)
        assert np.allclose(C, np.transpose(C, (1, 2, 0)), atol=1e-15)


def test_k_is_an_h_module():
    # [H, K] lies in K for a subalgebra H
    for H in (u2(), so2_so2()):
        pb = H.coeffs.T @ H.coeffs
        ph = np.eye(6) - pb
        phi = W.basis(4)
        hs = np.einsum("A,Aij->ij", H.coeffs[0], phi)
        for k in np.eye(6)[np.linalg.matrix_rank(pb):]:
            kk = W.from_vec(ph @ k)
            br = W.to_vec(W.bracket(hs, kk))
            assert np.max(np.abs(pb @ br)) < 1e-12


def test_matrix_and_four_index_round_trip(rng):
    for n in (3, 4):
        M = rng.standard_normal((W.dim_wedge2(n),) * 2)
        assert np.allclose(W.to_matrix(W.from_matrix(M)), M, atol=1e-14)
        E = W.from_matrix(M)
        assert W.antisymmetry_residual(E) == 0.0
        w = random_two_form(n, rng)
        assert np.allclose(W.to_vec(W.apply(E, w)), M @ W.to_vec(w), atol=1e-13)


def test_compose_is_matrix_product(rng):
    A, B = random_endo(4, rng), random_endo(4, rng)
    assert np.allclose(W.to_matrix(W.compose(A, B)), W.to_matrix(A) @ W.to_matrix(B), atol=1e-13)
    assert np.allclose(W.to_matrix(W.adjoint(A)), W.to_matrix(A).T, atol=1e-14)
    assert np.allclose(W.to_matrix(W.identity_endo(4)), np.eye(6))


def test_random_curvature_symmetries(rng):
    for n in (3, 4, 5):
        assert W.curvature_symmetry_residual(W.random_curvature(n, rng)) < 1e-14
    T = W.random_second_bianchi_T(4, rng)
    assert W.curvature_symmetry_residual(T) < 1e-13
    cyc = T + np.einsum("mabcd->abmcd", T) + np.einsum("mabcd->bmacd", T)
    assert np.max(np.abs(cyc)) < 1e-12


def test_trilinear_identity_is_fully_antisymmetric():
    n = 3
    I = W.identity_endo(n)
    T = W.trilinear_T(I, I, I)
    assert np.allclose(T, -np.einsum("abcdef->cdabef", T), atol=1e-15)
    assert np.allclose(T, -np.einsum("abcdef->abefcd", T), atol=1e-15)
    assert np.max(np.abs(T)) > 0.1


def test_trilinear_matches_brute_force(rng):
    n = 4
    A, B, C = (random_endo(n, rng) for _ in range(3))
    T = W.trilinear_T(A, B, C)
    eye = np.eye(n)
    for a, b, c, d, e, f in [(0, 1, 2, 3, 1, 2), (3, 0, 1, 2, 0, 3), (2, 1, 0, 3, 3, 1)]:
        v1, v2, v3 = W.wedge(eye[a], eye[b]), W.wedge(eye[c], eye[d]), W.wedge(eye[e], eye[f])
        expected = W.inner(W.bracket(W.apply(A, v1), W.apply(B, v2)), W.apply(C, v3))
        assert T[a, b, c, d, e, f] == pytest.approx(expected, abs=1e-12)
    # basis-coefficient form
    Tm = W.trilinear_T_matrix(A, B, C)
    phi = W.basis(n)
    for I_, J_, K_ in [(0, 1, 2), (5, 3, 4), (2, 2, 1)]:
        expected = W.inner(W.bracket(W.apply(A, phi[I_]), W.apply(B, phi[J_])), W.apply(C, phi[K_]))
        assert Tm[I_, J_, K_] == pytest.approx(expected, abs=1e-12)


def test_trilinear_dimension_mismatch():
    with pytest.raises(InvalidInput):
        W.trilinear_T(W.identity_endo(3), W.identity_endo(4), W.identity_endo(3))


@pytest.mark.parametrize("H", [u2(), so2_so2()], ids=["u2", "so2+so2"])
def test_tvan_on_subalgebra(H):
    p = projection_pair(H)
    for args in ((p.Phat, p.Pbar, p.Pbar), (p.Pbar, p.Phat, p.Pbar), (p.Pbar, p.Pbar, p.Phat)):
        assert np.max(np.abs(W.trilinear_T(*args))) < 1e-14


@pytest.mark.parametrize("n", [3, 4])
def test_sharp_symmetric_and_bilinear(n, rng):
    for _ in range(100):
        A, B = random_endo(n, rng), random_endo(n, rng)
        assert np.max(np.abs(W.sharp(A, B) - W.sharp(B, A))) < 1e-12
    assert np.max(np.abs(W.sharp(A, np.zeros_like(A)))) == 0.0


def test_identity_sharp_two_ways():
    for n in (3, 4, 5):
        I = W.identity_endo(n)
        a, b = W.sharp(I, I), W.sharp_basis_sum(I, I)
        assert np.max(np.abs(a - b)) < 1e-12
        # Id# = (n - 2) Id with the half-sum inner product
        assert np.allclose(W.to_matrix(a), (n - 2) * np.eye(W.dim_wedge2(n)), atol=1e-13)


def sharp_components(X, Y):
    """(X#Y)_ijkl from the index formula, independent of the structure constants."""
    return (
        np.einsum("kpiq,lpjq->ijkl", X, Y)
        - np.einsum("lpiq,kpjq->ijkl", X, Y)
        - np.einsum("kpjq,lpiq->ijkl", X, Y)
        + np.einsum("lpjq,kpiq->ijkl", X, Y)
    )


@settings(max_examples=25, deadline=None)
@given(seed=seeds, n=st.integers(3, 6))
def test_sharp_component_formula(seed, n):
    rng = np.random.default_rng(seed)
    A, B = random_endo(n, rng), random_endo(n, rng)
    assert np.max(np.abs(W.sharp(A, B) - sharp_components(A, B))) < 1e-11


def test_reaction_Q_examples(rng):
    assert np.max(np.abs(W.reaction_Q(np.zeros((4,) * 4)))) == 0.0
    for _ in range(100):
        Q = W.to_matrix(W.reaction_Q(W.random_curvature(4, rng)))
        assert np.max(np.abs(Q - Q.T)) < 1e-12
    # constant curvature K: Rm = 2K Id and Q = 4 (n - 1) K^2 Id
    n, K = 4, 0.3
    d = np.eye(n)
    R = K * (np.einsum("ad,bc->abcd", d, d) - np.einsum("ac,bd->abcd", d, d))
    assert np.allclose(W.to_matrix(W.curvature_endo(R)), 2 * K * np.eye(6))
    assert np.allclose(W.to_matrix(W.reaction_Q(R)), 4 * (n - 1) * K**2 * np.eye(6))


def test_reaction_S_linear_in_F(rng):
    n = 4
    A = random_endo(n, rng)
    F1 = np.stack([random_endo(n, rng) for _ in range(n)])
    F2 = np.stack([random_endo(n, rng) for _ in range(n)])
    assert np.max(np.abs(W.reaction_S(A, np.zeros_like(F1)))) == 0.0
    lhs = W.reaction_S(A, 2.0 * F1 - 0.5 * F2)
    rhs = 2.0 * W.reaction_S(A, F1) - 0.5 * W.reaction_S(A, F2)
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    with pytest.raises(InvalidInput):
        W.reaction_S(A, F1[0])


def test_reaction_S_vanishes_with_parallel_curvature():
    # symmetric space data: nabla Rm = 0 so S(Rm, nabla Rm) = nabla Q = 0
    n, K = 3, 1.0
    d = np.eye(n)
    R = K * (np.einsum("ad,bc->abcd", d, d) - np.einsum("ac,bd->abcd", d, d))
    assert np.max(np.abs(W.reaction_S(R, np.zeros((n,) * 5)))) == 0.0


@pytest.mark.parametrize("H", [u2(), so2_so2()], ids=["u2", "so2+so2"])
def test_qcomp_and_scomp(H, rng):
    pair = projection_pair(H)
    for _ in range(100):
        R = W.random_curvature(4, rng)
        T = W.random_second_bianchi_T(4, rng)
        scale = 1 + np.max(np.abs(R)) ** 3
        assert W.qcomp_identity(R, pair) < 1e-10 * scale
        assert W.scomp_identity(R, T, pair) < 1e-10 * scale


def test_qcomp_needs_trailing_projection(rng):
    # without the final o Phat the displayed right side is not equal to Q o Phat
    pair = projection_pair(u2())
    R = W.random_curvature(4, rng)
    lhs, _, literal = W.qcomp_terms(R, pair.Pbar, pair.Phat)
    assert np.max(np.abs(lhs - literal)) > 1e-3


def test_qcomp_trivial_and_precondition(rng):
    from holoflow.holonomy import span

    full = span(W.basis(4), 4)
    R = W.random_curvature(4, rng)
    assert W.qcomp_identity(R, projection_pair(full)) < 1e-12
    bad = span(np.array([W.e_wedge(0, 1, 4), W.e_wedge(1, 2, 4)]), 4)  # not closed
    with pytest.raises(PreconditionViolated):
        W.qcomp_identity(R, projection_pair(bad))


def test_conjugated_subalgebra_identities(rng):
    O = random_orthogonal(4, rng)
    pair = projection_pair(conjugate(u2(), O))
    R = W.random_curvature(4, rng)
    assert W.qcomp_identity(R, pair) < 1e-10 * (1 + np.max(np.abs(R)) ** 3)


def test_reaction_U_forms(rng):
    n = 4
    R = W.random_curvature(n, rng)
    T = W.random_second_bianchi_T(n, rng)
    U = W.reaction_U(W.curvature_endo(R), W.curvature_endo(T))
    assert np.max(np.abs(U - W.reaction_U_expanded(R, T))) < 1e-12
    assert np.max(np.abs(U - W.reaction_U_lambda(R, T))) < 1e-12
    assert np.max(np.abs(U - W.reaction_U_hamilton(R, T))) < 1e-12
    assert np.max(np.abs(W.reaction_U(W.curvature_endo(R), np.zeros((n,) * 5)))) == 0.0


def test_sym_projector_is_idempotent(rng):
    V = rng.standard_normal((4,) * 4)
    P = W.sym_projector(V)
    assert np.max(np.abs(W.sym_projector(P) - P)) < 1e-14


def test_lambda_action_brute_force(rng):
    n, k = 3, 3
    U = rng.standard_normal((n,) * k)
    L = W.lambda_action(U, k)
    expected = np.zeros((n, n) + (n,) * k)
    for p, d in itertools.product(range(n), repeat=2):
        for idx in itertools.product(range(n), repeat=k):
            for s in range(k):
                if idx[s] == p:
                    j = list(idx)
                    j[s] = d
                    expected[(p, d) + idx] += U[tuple(j)]
    assert np.allclose(L, expected, atol=1e-15)


def test_batched_inputs(rng):
    R = np.stack([W.random_curvature(3, rng) for _ in range(5)])
    Q = W.reaction_Q(R)
    for k in range(5):
        assert np.allclose(Q[k], W.reaction_Q(R[k]), atol=1e-14)
