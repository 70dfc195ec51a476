import numpy as np
import pytest
from scipy.integrate import solve_ivp

from holoflow import wedge as W
from holoflow.errors import ConfigError, InvalidInput, InvalidState, PreconditionViolated
from holoflow.flow import (
    FlowConfig,
    adapted_basis,
    basis_operator,
    bernstein_quantity,
    cfl_limit,
    evolve_adapted_basis,
    evolve_projection_ode,
    initial_state,
    parabolic_extend_projection,
    run_flow,
    tensor_norm2,
)
from holoflow.holonomy import projection_pair, span
from holoflow.models import berger_sphere, flat_torus, milnor_ricci, round_s3, round_sphere, warped_t3
from holoflow.models.symmetric import SymmetricGeometry

h = lambda x: 1 + 0.3 * np.cos(x)
f = lambda x: 1 + 0.2 * np.sin(x)
E02 = span(W.e_wedge(0, 2, 3)[None], 3)


@pytest.mark.parametrize("kw", [
    {"dt": 0.0, "tEnd": 1.0},
    {"dt": -1e-3, "tEnd": 1.0},
    {"dt": 1e-3, "tEnd": -1.0},
    {"dt": 1e-3, "tEnd": 1.0, "scheme": "leapfrog"},
    {"dt": 1e-3, "tEnd": 1.0, "cflSafety": 1.0},
    {"dt": 1e-3, "tEnd": 1.0, "outputEvery": 0},
    {"dt": 3e-3, "tEnd": 0.01},
])
def test_flow_config_validation(kw):
    with pytest.raises(ConfigError):
        FlowConfig(**kw)


def test_flow_config_steps():
    assert FlowConfig(1e-3, 0.05).steps == 50
    assert FlowConfig(1e-3, 0.0).steps == 0


def test_flat_torus_is_static():
    geom = flat_torus(3, 8)
    traj = run_flow(initial_state(geom), FlowConfig(1e-3, 0.01))
    assert traj.failure is None
    assert len(traj.states) == 11
    for s in traj.states:
        assert np.max(np.abs(s.geom.metric - geom.metric)) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sphere_homothety(n):
    r = 1.3
    T = 0.1 / (n - 1)
    traj = run_flow(initial_state(round_sphere(n, r)), FlowConfig(T / 100, T))
    s = traj.states[-1].geom.scales[0]
    exact = 1 - 2 * (n - 1) * T / r**2
    assert abs(s - exact) / exact < 1e-6


def test_lie_round_s3_homothety():
    r = 1.0
    traj = run_flow(initial_state(round_s3(r)), FlowConfig(1e-3, 0.1))
    g = traj.states[-1].geom.metric
    assert np.max(np.abs(g - (r**2 - 4 * 0.1) * np.eye(3))) / (r**2 - 0.4) < 1e-6


def test_product_scales():
    geom = SymmetricGeometry([("sphere", 2, 1.0), ("sphere", 3, 2.0), ("flat", 1)])
    T = 0.05
    traj = run_flow(initial_state(geom), FlowConfig(1e-3, T))
    exact = [1 - 2 * 1 * T / 1.0, 1 - 2 * 2 * T / 4.0, 1.0]
    assert np.allclose(traj.states[-1].geom.scales, exact, rtol=1e-10)


def test_berger_matches_reference_ode():
    A0 = np.array([1.0, 1.0, 4.0])
    # coordinate Ricci of a diagonal left-invariant metric is r_i A_i
    sol = solve_ivp(lambda t, A: -2 * milnor_ricci(A) * A, (0, 0.1), A0,
                    method="DOP853", rtol=1e-13, atol=1e-14)
    traj = run_flow(initial_state(berger_sphere(*A0)), FlowConfig(1e-3, 0.1))
    g = traj.states[-1].geom.metric
    assert np.max(np.abs(np.diag(g) - sol.y[:, -1])) < 1e-8
    assert np.max(np.abs(g - np.diag(np.diag(g)))) < 1e-13


def test_frames_stay_orthonormal():
    traj = run_flow(initial_state(warped_t3(f, h, 32)), FlowConfig(1e-3, 0.02))
    assert max(s.geom.frame_residual() for s in traj.states) < 1e-10
    traj = run_flow(initial_state(berger_sphere(1.0, 2.0, 3.0)), FlowConfig(1e-3, 0.05))
    assert max(s.geom.frame_residual() for s in traj.states) < 1e-12


def test_cfl_violation():
    geom = warped_t3(f, h, 32)
    assert np.isinf(cfl_limit(round_s3(), 0.5))
    with pytest.raises(ConfigError):
        run_flow(initial_state(geom), FlowConfig(0.1, 0.2))
    # the implicit scheme has no step limit
    traj = run_flow(initial_state(geom), FlowConfig(0.01, 0.02, scheme="semi-implicit-fd"))
    assert traj.failure is None


def test_explicit_schemes_agree():
    geom = warped_t3(f, h, 32)
    a = run_flow(initial_state(geom), FlowConfig(2.5e-4, 0.01)).states[-1].geom.metric
    b = run_flow(initial_state(geom), FlowConfig(2.5e-4, 0.01, scheme="explicit-fd")).states[-1].geom.metric
    assert np.max(np.abs(a - b)) < 1e-4


def test_singularity_ends_run():
    # round S^3 of radius 1 collapses at t = 1/4
    traj = run_flow(initial_state(round_sphere(3)), FlowConfig(0.01, 0.4))
    assert traj.failure is not None
    assert 0.24 <= traj.failure <= 0.26
    assert traj.states[-1].t < 0.25
    assert all(np.all(np.isfinite(s.geom.metric)) for s in traj.states)


def test_outputs_include_last():
    traj = run_flow(initial_state(round_s3()), FlowConfig(1e-3, 0.01, outputEvery=3))
    assert traj.outputs == [0, 3, 6, 9, 10]


def test_initial_state_broadcasts_pair():
    geom = warped_t3(None, h, 16)
    st = initial_state(geom, E02)
    assert st.proj.Pbar.shape == (16, 1, 1, 3, 3, 3, 3)
    assert st.k == 1 and st.basis.shape == (16, 1, 1, 3, 3, 3)
    with pytest.raises(InvalidInput):
        initial_state(geom, np.eye(3))


def test_adapted_basis():
    for H in (E02, span(np.zeros((1, 3, 3)), 3), span(W.basis(3), 3)):
        B = adapted_basis(H)
        gram = W.inner(B[:, None], B[None, :])
        assert np.allclose(gram, np.eye(3), atol=1e-14)
        if H.dim:
            assert H.contains(B[: H.dim]) < 1e-14


def test_projection_ode_reversible():
    traj = run_flow(initial_state(warped_t3(f, h, 32)), FlowConfig(5e-4, 0.02))
    pair = projection_pair(E02)
    n0 = traj.states[0].geom.shape
    pb = np.broadcast_to(pair.Pbar, n0 + (3,) * 4).copy()
    ph = np.broadcast_to(pair.Phat, n0 + (3,) * 4).copy()
    from holoflow.holonomy import ProjectionPair

    fwd = evolve_projection_ode(traj, ProjectionPair(pb, ph))
    back = evolve_projection_ode(traj, fwd[-1], start=len(traj.states) - 1, stop=0)
    assert np.max(np.abs(back[-1].Pbar - pb)) < 1e-9
    # the ODE is D_t P = 0: frame components stay put while coordinate components move
    assert np.max(np.abs(fwd[-1].Pbar - pb)) < 1e-9
    g0, g1 = traj.states[0].geom, traj.states[-1].geom
    assert np.max(np.abs(g1.to_coords(fwd[-1].Pbar, 4) - g0.to_coords(pb, 4))) > 1e-4


def test_projection_ode_on_einstein_metric_is_static():
    # Rc = c g: the frame components of the extension stay constant
    geom = round_sphere(3)
    traj = run_flow(initial_state(geom), FlowConfig(1e-3, 0.05))
    pair = projection_pair(span(W.e_wedge(0, 1, 3)[None], 3))
    out = evolve_projection_ode(traj, pair)
    assert max(np.max(np.abs(p.Pbar - pair.Pbar)) for p in out) < 1e-9
    assert max(p.invariant_residual() for p in out) < 1e-9


def test_basis_operator_formula(rng):
    geom = berger_sphere(1.0, 2.0, 3.0)
    fs = np.stack([W.e_wedge(0, 1, 3), rng.standard_normal((3, 3))])
    fs[1] = fs[1] - fs[1].T
    Rc = geom.ricci
    expected = -np.einsum("aq,Aqb->Aab", Rc, fs) - np.einsum("Aaq,qb->Aab", fs, Rc)
    assert np.max(np.abs(basis_operator(geom, fs) - expected)) < 1e-12


def test_adapted_basis_split_case():
    geom = warped_t3(None, h, 32)
    st = initial_state(geom, E02)
    traj = run_flow(st, FlowConfig(5e-4, 0.02, outputEvery=8))
    pairs = evolve_projection_ode(traj, st.proj)
    rep = evolve_adapted_basis(traj, st.basis, st.k, pairs=pairs)
    assert np.max(rep.orthonormality) < 1e-8
    assert np.max(rep.cross_block) < 1e-10
    assert np.max(rep.pbar_mismatch) < 1e-7


def test_adapted_basis_rejects_non_orthonormal():
    geom = warped_t3(None, h, 16)
    st = initial_state(geom, E02)
    traj = run_flow(st, FlowConfig(1e-3, 0.002))
    with pytest.raises(InvalidState):
        evolve_adapted_basis(traj, 2 * st.basis, st.k)


def test_parabolic_errors():
    traj = run_flow(initial_state(round_s3()), FlowConfig(1e-3, 0.002))
    with pytest.raises(InvalidInput):
        parabolic_extend_projection(traj, projection_pair(E02).Phat)
    geom = warped_t3(f, h, 32)
    big = run_flow(initial_state(geom), FlowConfig(0.01, 0.02, scheme="semi-implicit-fd"))
    st = initial_state(geom, E02)
    with pytest.raises(ConfigError):
        parabolic_extend_projection(big, st.proj.Phat)
    small = run_flow(initial_state(geom), FlowConfig(1e-4, 2e-4))
    with pytest.raises(PreconditionViolated):
        parabolic_extend_projection(small, st.proj.Phat)


def test_parabolic_split_case_stays_constant():
    geom = warped_t3(None, h, 32)
    st = initial_state(geom, E02)
    traj = run_flow(st, FlowConfig(5e-4, 0.02, outputEvery=8))
    ser = parabolic_extend_projection(traj, st.proj.Phat)
    assert ser.L == pytest.approx(4 * np.max(tensor_norm2(st.proj.Phat, 4)))
    assert max(np.max(np.abs(P - st.proj.Phat)) for P in ser.Phat) < 1e-12
    assert np.all(np.diff(ser.bernstein_max) <= 1e-14)


def test_bernstein_quantity_zero_for_parallel():
    geom = warped_t3(None, h, 16)
    Ph = initial_state(geom, E02).proj.Phat
    assert np.max(bernstein_quantity(geom, Ph, 1.0)) < 1e-24
