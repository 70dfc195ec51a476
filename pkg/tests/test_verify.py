import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoflow import wedge as W
from holoflow.errors import GaugeError, InvalidInput, UnsupportedOrder
from holoflow.flow import FlowState, initial_state
from holoflow.holonomy import projection_pair, span
from holoflow.models import berger_sphere, flat_torus, round_s3, warped_t3
from holoflow.verify import (
    EQUATIONS,
    build_system_state,
    check_commutators,
    refinement_study,
    residual_evolution,
)
from holoflow.verify import evolution as ev
from holoflow.verify.experiments import load_scenario, system_series
from holoflow.verify.inequalities import check_inequalities, inequality_series, ratio_max
from holoflow.verify.residuals import advance, observed_order, rhs_of
from holoflow.verify.system import adj, hat, hat_T
from conftest import conjugate, random_orthogonal, so2_so2, u2

f = lambda x: 1 + 0.2 * np.sin(x)
h = lambda x: 1 + 0.3 * np.cos(x)
E01 = span(W.e_wedge(0, 1, 3)[None], 3)
E02 = span(W.e_wedge(0, 2, 3)[None], 3)


def warped(N):
    return initial_state(warped_t3(f, h, N), E02)


# -- composites ----------------------------------------------------------

def test_zero_phat_composites_vanish():
    geom = warped_t3(f, h, 16)
    full = span(W.basis(3), 3)
    S = build_system_state(initial_state(geom, full))
    for name in ("Phat", "A", "B", "Rhat", "That"):
        assert np.max(np.abs(getattr(S, name))) == 0.0
    assert S.norms()["X"] == 0.0 and S.norms()["Y"] == 0.0


def test_flat_composites_vanish():
    S = build_system_state(initial_state(flat_torus(3, 8), E01))
    assert max(v for v in S.norms().values()) == 0.0


def test_composites_split_curvature(rng):
    H = u2()
    p = projection_pair(H)
    R = W.random_curvature(4, rng)
    # the hatted and barred parts reassemble the curvature operator
    assert np.max(np.abs(hat(p.Phat, R) + hat(p.Pbar, R) - W.curvature_endo(R))) < 1e-13
    assert np.max(np.abs(hat(p.Phat, R) - W.compose(W.curvature_endo(R), p.Phat))) < 1e-14
    assert np.max(np.abs(adj(p.Phat, R) - np.einsum("ijkl->klij", hat(p.Phat, R)))) < 1e-14


def test_rhat_vanishes_for_curvature_valued_in_H(rng):
    # Rm = sum c_AB h^A (x) h^B with h in H kills the complement
    H = conjugate(u2(), random_orthogonal(4, rng))
    c = rng.standard_normal((H.dim, H.dim))
    M = H.coeffs.T @ (c + c.T) @ H.coeffs
    Rm = W.from_matrix(M)
    p = projection_pair(H)
    assert np.max(np.abs(W.compose(Rm, p.Phat))) < 1e-13
    T = np.stack([Rm, 2 * Rm, -Rm, 0 * Rm])
    assert np.max(np.abs(hat_T(p.Phat, T))) < 1e-13


def test_system_state_errors():
    geom = flat_torus(3, 8)
    with pytest.raises(InvalidInput):
        build_system_state(FlowState(0.0, geom))

    class Shallow(type(geom)):
        max_derivative_order = 2

    g2 = Shallow(geom.grid, geom.metric)
    with pytest.raises(UnsupportedOrder):
        build_system_state(initial_state(g2, E01))
    assert build_system_state(initial_state(g2, E01), need_B=False).B is None


# -- right-hand sides ----------------------------------------------------

@pytest.mark.parametrize("H", [u2(), so2_so2()], ids=["u2", "so2+so2"])
def test_schematic_audit_zero(H, rng):
    worst = ev.schematic_audit(projection_pair(H), rng, trials=10)
    assert set(worst) == {"A", "B", "Rhat", "That"}
    assert max(worst.values()) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), which=st.sampled_from(["u2", "so2so2"]))
def test_frame_forms_match_matrix_forms(seed, which):
    rng = np.random.default_rng(seed)
    H = conjugate(u2() if which == "u2" else so2_so2(), random_orthogonal(4, rng))
    p = projection_pair(H)
    R = W.random_curvature(4, rng)
    T = W.random_second_bianchi_T(4, rng)
    Rh, Rb, Th = hat(p.Phat, R), hat(p.Pbar, R), hat_T(p.Phat, T)
    q = ev.q_circ_phat(R, p.Phat)
    s = ev.s_circ_phat(R, T, p.Phat)
    assert np.max(np.abs(q - ev.q_circ_phat_frame(R, p.Phat, Rh, Rb))) < 1e-10 * max(1, np.max(np.abs(q)))
    assert np.max(np.abs(s - ev.s_circ_phat_frame(R, T, p.Phat, Rh, Th, Rb))) < 1e-10 * max(1, np.max(np.abs(s)))


def test_raw_and_displayed_forms_on_random_data(rng):
    p = projection_pair(u2())
    R = W.random_curvature(4, rng)
    T = W.random_second_bianchi_T(4, rng)
    A = rng.standard_normal((4,) * 5)
    B = rng.standard_normal((4,) * 6)
    DT = rng.standard_normal((4,) * 6)
    Th = hat_T(p.Phat, T)
    assert np.max(np.abs(ev.rhs_A(R, p.Phat, A, Th) - ev.rhs_A_raw(R, T, p.Phat, A))) < 1e-12
    d = ev.rhs_That(R, T, DT, p.Phat, A, B) - ev.rhs_That_displayed(R, T, DT, p.Phat, A, B, hat(p.Phat, R), Th)
    assert np.max(np.abs(d)) < 1e-11


def test_raw_and_displayed_forms_on_exact_model():
    # constant frame components of a non-holonomy pair: A and B nonzero, all data exact
    S = build_system_state(initial_state(berger_sphere(1.0, 2.0, 3.0), E01))
    assert np.max(np.abs(S.A)) > 0.1 and np.max(np.abs(S.B)) > 0.1
    for eq, form in (("A", "raw"), ("B", "raw"), ("That", "derived"), ("Rhat", "frame"), ("That", "frame")):
        assert np.max(np.abs(rhs_of(eq, S) - rhs_of(eq, S, form))) < 1e-12


def test_raw_B_converges_on_grid():
    d = []
    for N in (32, 64):
        S = build_system_state(warped(N))
        d.append(np.max(np.abs(rhs_of("B", S) - rhs_of("B", S, "raw"))))
    assert d[1] < 1e-3 and d[0] / d[1] > 3.5


def test_unknown_equation():
    S = build_system_state(warped(16))
    with pytest.raises(InvalidInput):
        rhs_of("Z", S)


# -- residuals -----------------------------------------------------------

@pytest.mark.parametrize("eq", EQUATIONS)
def test_flat_residuals(eq):
    s0 = initial_state(flat_torus(3, 8), E01)
    for r in residual_evolution(eq, s0, advance(s0, 1e-3)):
        assert r.residual < 1e-12 and r.passed


@pytest.mark.parametrize("eq", EQUATIONS)
def test_round_s3_spatial_residual(eq):
    s0 = initial_state(round_s3(), E01)
    spatial = residual_evolution(eq, s0, advance(s0, 1e-4), eps=3e-5)[1]
    assert spatial.kind == "spatial"
    assert spatial.residual < 1e-6


@pytest.mark.parametrize("eq", EQUATIONS)
def test_berger_spatial_residual(eq):
    s0 = initial_state(berger_sphere(1.0, 1.0, 4.0), E01)
    (r,) = residual_evolution(eq, s0, eps=3e-5, tol=1e-8)
    assert r.passed


def test_residuals_need_pair():
    geom = warped_t3(f, h, 16)
    with pytest.raises(InvalidInput):
        residual_evolution("A", FlowState(0.0, geom))
    (r,) = residual_evolution("R", FlowState(0.0, geom))
    assert r.residual < 0.1


def test_gauge_error():
    geom = berger_sphere(1.0, 2.0, 3.0)
    bad = geom.with_state(geom.metric, 1.01 * geom.frames)
    with pytest.raises(GaugeError):
        residual_evolution("R", FlowState(0.0, bad, projection_pair(E01)))
    with pytest.raises(GaugeError):
        check_commutators(FlowState(0.0, bad, projection_pair(E01)))


def test_backward_pair_rejected():
    s0 = warped(16)
    s1 = advance(s0, 1e-4)
    with pytest.raises(InvalidInput):
        residual_evolution("R", s1, s0)


def test_warped_A_total_converges():
    r32 = residual_evolution("A", warped(32), advance(warped(32), 1e-4))[0].residual
    r64 = residual_evolution("A", warped(64), advance(warped(64), 2.5e-5))[0].residual
    assert r32 / r64 >= 3.5


def test_refinement_study_flat_is_exact():
    b = lambda N: initial_state(flat_torus(3, N), E01)
    out = refinement_study("R", b, levels=((8, 1e-3), (16, 5e-4)))
    assert all(r.passed and r.order is None for r in out.values())
    with pytest.raises(InvalidInput):
        refinement_study("R", b, levels=((8, 1e-3),))


def test_observed_order():
    assert observed_order(4.0, 1.0, 2.0) == pytest.approx(2.0)
    assert observed_order(0.0, 1.0, 2.0) is None


def test_commutators_exact_models():
    for geom in (berger_sphere(1.0, 1.0, 4.0), round_s3()):
        s0 = initial_state(geom, E01)
        for r in check_commutators(s0, eps=3e-5, tol=1e-8):
            assert r.passed, (r.equation, r.residual)


def test_commutators_grid():
    reps = {r.equation: r for r in check_commutators(warped(32))}
    assert reps["lambda"].residual < 1e-12 and reps["rho"].residual < 1e-12
    # terms of the heat relation are O(10): judge relative to their size
    assert reps["dt"].C < 5e-2 and reps["heat"].C < 5e-2
    assert reps["heat"].norms["scale"] > 10


# -- inequalities --------------------------------------------------------

def test_ratio_max():
    assert ratio_max([0.0, 1.0], [0.0, 2.0]) == 0.5
    assert ratio_max([1.0], [0.0]) == np.inf
    assert ratio_max([0.0], [0.0]) == 0.0


def test_inequalities_empty():
    with pytest.raises(InvalidInput):
        inequality_series([])


def test_inequalities_flat():
    sc = load_scenario("flat-torus")
    reps = check_inequalities(system_series(sc))
    assert [r.equation for r in reps] == ["heat", "ode"]
    assert all(r.passed and r.C == 0.0 for r in reps)


def test_inequalities_product_identically_zero():
    samples = inequality_series(system_series(load_scenario("product-s2xs2"), every=10))
    assert max(s.X for s in samples) < 1e-12 and max(s.Y for s in samples) < 1e-12
    assert all(s.C_heat == 0.0 and s.C_ode == 0.0 for s in samples)


def test_inequalities_wrong_H():
    series = system_series(load_scenario("warped-t3", overrides={"resolution": 32}), every=8)
    reps = check_inequalities(series)
    assert all(r.passed and 0 < r.C < np.inf for r in reps)
    assert reps[0].norms["X_T"] > 0.1
