import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoflow import wedge as W
from holoflow.errors import InvalidInput, Unsupported, UnsupportedOrder
from holoflow.holonomy import (
    ProjectionPair,
    ambrose_singer_seeds,
    berger_candidates,
    commutant,
    detect_complex_structure,
    generate_algebra,
    holonomy_report,
    invariant_subspaces,
    lambda_projection_residual,
    projection_pair,
    span,
    subalgebra_from_pair,
    tvan_residuals,
)
from holoflow.models import berger_sphere, flat_torus, round_sphere, s2xs2, warped_t3
from conftest import J4, conjugate, random_orthogonal, so2_so2, u2


def test_generate_single_seed():
    H = generate_algebra(np.array([W.e_wedge(0, 1, 3)]))
    assert H.dim == 1
    assert H.contains(W.e_wedge(0, 1, 3)) < 1e-14


def test_generate_two_seeds_gives_so3():
    H = generate_algebra(np.array([W.e_wedge(0, 1, 3), W.e_wedge(1, 2, 3)]))
    assert H.dim == 3


def test_generate_commuting_seeds():
    H = generate_algebra(np.array([W.e_wedge(0, 1, 4), W.e_wedge(2, 3, 4)]))
    assert H.dim == 2
    assert H.closure_residual() < 1e-14


def test_generate_is_idempotent(rng):
    seeds = np.array([W.e_wedge(0, 1, 5), W.e_wedge(1, 2, 5) + W.e_wedge(3, 4, 5)])
    H = generate_algebra(seeds)
    again = generate_algebra(H.basis)
    assert again.dim == H.dim
    assert H.contains(again.basis) < 1e-12
    assert H.closure_residual() < 1e-12


def test_generate_errors():
    with pytest.raises(InvalidInput):
        generate_algebra(np.array([W.e_wedge(0, 1, 3)]), tol=0.0)
    with pytest.raises(InvalidInput):
        generate_algebra(np.zeros((0, 3, 3)))
    with pytest.raises(InvalidInput):
        generate_algebra(np.eye(3)[None])


def test_generate_zero_seeds_is_trivial():
    assert generate_algebra(np.zeros((2, 3, 3))).dim == 0


def test_product_sphere_holonomy():
    geom = s2xs2()
    H = generate_algebra(ambrose_singer_seeds(geom, None, 0))
    assert H.dim == 2
    assert H.contains(np.array([W.e_wedge(0, 1, 4), W.e_wedge(2, 3, 4)])) < 1e-12


def test_seeds_flat_torus_trivial():
    geom = flat_torus(3, 8)
    seeds = ambrose_singer_seeds(geom, (0, 0, 0), 1)
    assert np.max(np.abs(seeds)) < 1e-12
    assert generate_algebra(seeds).dim == 0


def test_seeds_sphere_full():
    for n in (3, 4):
        assert generate_algebra(ambrose_singer_seeds(round_sphere(n), None, 0)).dim == n * (n - 1) // 2


def test_seeds_berger_full():
    geom = berger_sphere(1.0, 1.0, 4.0)
    assert generate_algebra(ambrose_singer_seeds(geom, None, 1)).dim == 3


def test_seeds_warped_split_in_e0e2():
    # f = 1: only the (x, z) plane curves
    geom = warped_t3(None, lambda x: 1 + 0.3 * np.cos(x), 32)
    p = (3, 0, 0)
    seeds = ambrose_singer_seeds(geom, p, 1)
    H = generate_algebra(seeds, tol=1e-6, atol=1e-8)
    assert H.dim == 1
    assert span(W.e_wedge(0, 2, 3)[None], 3).contains(H.basis) < 1e-10


def test_seeds_order_errors():
    geom = flat_torus(3, 8)
    with pytest.raises(UnsupportedOrder):
        ambrose_singer_seeds(geom, (0, 0, 0), geom.max_derivative_order + 1)
    with pytest.raises(InvalidInput):
        ambrose_singer_seeds(geom, (0, 0, 0), -1)


def test_projection_pair_examples():
    full = projection_pair(span(W.basis(3), 3))
    assert np.allclose(W.to_matrix(full.Pbar), np.eye(3))
    assert np.max(np.abs(full.Phat)) < 1e-15
    triv = projection_pair(span(np.zeros((1, 3, 3)), 3))
    assert np.allclose(W.to_matrix(triv.Phat), np.eye(3))
    one = projection_pair(span(W.e_wedge(0, 1, 3)[None], 3))
    assert one.ranks() == (1, 2)


def test_projection_pair_u2():
    p = projection_pair(u2())
    assert p.ranks() == (4, 2)
    assert p.invariant_residual() < 1e-14
    assert subalgebra_from_pair(p).dim == 4


def test_projection_pair_rejects_bad_basis():
    from holoflow.holonomy import Subalgebra

    c = np.zeros((1, 3))
    c[0, 0] = 2.0
    with pytest.raises(InvalidInput):
        projection_pair(Subalgebra(3, c))
    with pytest.raises(InvalidInput):
        projection_pair(np.eye(3))


def test_from_flat_round_trip(rng):
    H = conjugate(u2(), random_orthogonal(4, rng))
    p = projection_pair(H)
    q = ProjectionPair.from_flat(W.to_matrix(p.Pbar))
    assert np.max(np.abs(q.Phat - p.Phat)) < 1e-14


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), which=st.sampled_from(["u2", "so2so2", "so3"]))
def test_tvan_and_lambda_on_conjugates(seed, which):
    rng = np.random.default_rng(seed)
    H = {
        "u2": u2,
        "so2so2": so2_so2,
        "so3": lambda: span(np.array([W.e_wedge(i, j, 4) for i, j in ((0, 1), (0, 2), (1, 2))]), 4),
    }[which]()
    p = projection_pair(conjugate(H, random_orthogonal(4, rng)))
    assert max(tvan_residuals(p)) < 1e-12
    assert lambda_projection_residual(p) < 1e-12
    assert p.invariant_residual() < 1e-12


def test_tvan_fails_off_subalgebra():
    # span of e01, e12 is not closed: T[Phat, Pbar, Pbar] is nonzero
    p = projection_pair(span(np.array([W.e_wedge(0, 1, 3), W.e_wedge(1, 2, 3)]), 3))
    assert max(tvan_residuals(p)) > 0.1


def test_commutant_examples():
    assert len(commutant(span(np.zeros((1, 3, 3)), 3))) == 9
    # so(3) acts irreducibly on R^3: commutant is the scalars
    so3 = span(W.basis(3), 3)
    assert len(commutant(so3)) == 1
    # u(2): commutant spanned by Id and J
    C = commutant(u2())
    assert len(C) == 2
    flat = C.reshape(2, -1)
    proj = flat.T @ np.linalg.pinv(flat.T)
    assert np.linalg.norm(proj @ J4.ravel() - J4.ravel()) < 1e-10


def test_invariant_subspaces():
    assert sorted(b.shape[1] for b in invariant_subspaces(so2_so2())) == [2, 2]
    assert [b.shape[1] for b in invariant_subspaces(span(W.basis(3), 3))] == [3]
    one = span(W.e_wedge(0, 2, 3)[None], 3)
    blocks = invariant_subspaces(one)
    assert sorted(b.shape[1] for b in blocks) == [1, 2]
    line = next(b for b in blocks if b.shape[1] == 1)
    assert abs(abs(line[1, 0]) - 1) < 1e-10


def test_complex_structure():
    J = detect_complex_structure(u2())
    assert J is not None
    assert np.max(np.abs(J @ J + np.eye(4))) < 1e-10
    assert np.max(np.abs(J @ J4 - J4 @ J)) < 1e-10
    assert detect_complex_structure(span(W.basis(4), 4)) is None
    with pytest.raises(Unsupported):
        detect_complex_structure(span(W.basis(3), 3))


def test_berger_candidates():
    assert berger_candidates(0, 4) == ["trivial"]
    assert berger_candidates(6, 4) == ["SO(4)"]
    assert berger_candidates(4, 4) == ["U(2)"]
    assert "SU(2)" in berger_candidates(3, 4)
    assert berger_candidates(14, 7) == ["G2"]
    assert "Spin(7)" in berger_candidates(21, 8)
    assert "Sp(2)" in berger_candidates(10, 8)
    assert berger_candidates(2, 4) == ["reducible/symmetric-unresolved"]
    with pytest.raises(InvalidInput):
        berger_candidates(7, 4)


def test_holonomy_report_dict():
    rep = holonomy_report(u2()).to_dict()
    assert rep["dim"] == 4
    assert rep["invariantSubspaces"] == [4]
    assert "U(2)" in rep["bergerCandidates"]
    assert np.array(rep["complexStructure"]).shape == (4, 4)
    odd = holonomy_report(span(W.basis(3), 3)).to_dict()
    assert odd["complexStructure"] is None and odd["bergerCandidates"] == ["SO(3)"]
