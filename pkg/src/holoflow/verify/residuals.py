"""Residuals of the evolution equations and commutator relations along a flow.

In the evolved frame gauge ``D_t`` of a tensor is the time derivative of its
frame components.  Three residuals are reported per equation:

``total``     forward difference between two flow states minus the right-hand
              side; ``O(dt) + O(h^2)``.
``spatial``   the exact time derivative (a derivative along the flow velocity
              in the space of metrics and frames) minus the right-hand side;
              ``O(h^2)`` on grids, round-off on exact models.
``temporal``  forward difference minus the exact time derivative; ``O(dt)``.
"""
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import wedge as W
from ..errors import GaugeError, InvalidInput
from ..holonomy import ProjectionPair
from ..flow import FlowConfig, FlowState, flow_velocity, step_metric, tensor_norm2
from ..models.base import lowdin
from ..models.grid import GridGeometry
from ..models.symmetric import SymmetricGeometry
from . import evolution as ev
from .system import build_system_state, hat, hat_T

EQUATIONS = ("A", "B", "R", "T", "Rhat", "That")
HEAT = {"R", "T", "Rhat", "That"}
GAUGE_TOL = 1e-6


@dataclass
class ResidualReport:
    equation: str
    kind: str
    residual: float
    norms: dict
    C: float
    tolerance: float
    passed: bool
    order: float = None
    levels: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def sup(U):
    return float(np.max(np.abs(U), initial=0.0))


def observed_order(r_coarse, r_fine, ratio):
    """``log(r_coarse / r_fine) / log(ratio)``; ``None`` when either residual is at round-off."""
    if r_fine <= 0 or r_coarse <= 0:
        return None
    return float(np.log(r_coarse / r_fine) / np.log(ratio))


# ---------------------------------------------------------------------------
# Fields and right-hand sides


def field_of(eq, geom, pair):
    Ph = pair.Phat
    if eq == "R":
        return geom.riemann
    if eq == "T":
        return geom.nabla_riemann
    if eq == "A":
        return geom.covariant_derivative(Ph)
    if eq == "B":
        return geom.covariant_derivative(geom.covariant_derivative(Ph))
    if eq == "Rhat":
        return hat(Ph, geom.riemann)
    if eq == "That":
        return hat_T(Ph, geom.nabla_riemann)
    raise InvalidInput(f"unknown equation {eq!r}; choose from {EQUATIONS}")


def rhs_of(eq, S, form="displayed"):
    """Right-hand side of equation ``eq`` on a SystemState.

    ``form`` selects the displayed expression or the ``raw`` / ``derived`` one
    that does not rely on the subalgebra property.
    """
    g = S.geom
    if eq == "R":
        return ev.rhs_R(S.R)
    if eq == "T":
        return ev.rhs_T(S.R, S.T)
    if eq == "A":
        if form == "raw":
            return ev.rhs_A_raw(S.R, S.T, S.Phat, S.A)
        return ev.rhs_A(S.R, S.Phat, S.A, S.That)
    if eq == "B":
        if form == "raw":
            return ev.rhs_B_raw(S.R, S.T, g.nabla2_riemann, S.Phat, S.A, S.B)
        return ev.rhs_B(S.R, S.T, S.Phat, S.A, S.B, g.covariant_derivative(S.That))
    if eq == "Rhat":
        if form == "frame":
            qp = ev.q_circ_phat_frame(S.R, S.Phat, S.Rhat, S.Rbar)
            return ev.rhs_Rhat(S.R, S.T, S.Phat, S.A, S.B, qp=qp)
        return ev.rhs_Rhat(S.R, S.T, S.Phat, S.A, S.B)
    if eq == "That":
        DT = g.nabla2_riemann
        if form == "derived":
            return ev.rhs_That(S.R, S.T, DT, S.Phat, S.A, S.B)
        sp = None
        if form == "frame":
            sp = ev.s_circ_phat_frame(S.R, S.T, S.Phat, S.Rhat, S.That, S.Rbar)
        return ev.rhs_That_displayed(S.R, S.T, DT, S.Phat, S.A, S.B, S.Rhat, S.That, sp=sp)
    raise InvalidInput(f"unknown equation {eq!r}; choose from {EQUATIONS}")


def _rhs_norms(eq, S):
    names = {
        "R": ("R",),
        "T": ("R", "T"),
        "A": ("R", "A", "That"),
        "B": ("R", "T", "A", "B", "That"),
        "Rhat": ("R", "T", "A", "B", "Rhat"),
        "That": ("R", "T", "A", "B", "Rhat", "That"),
    }[eq]
    return {k: sup(getattr(S, k)) for k in names}


# ---------------------------------------------------------------------------
# Flow-direction derivative


def perturbed(geom, eps):
    """Geometry moved by ``eps`` along the Ricci flow velocity of metric and frame."""
    if eps == 0:
        return geom
    dg, dE = flow_velocity(geom)
    g = geom.metric + eps * dg
    E = lowdin(geom.frames + eps * dE, g)
    return geom.with_state(g, E)


def flow_derivative(geom, fn, eps=1e-3):
    """Fourth-order central difference of ``fn(geom)`` along the flow velocity."""
    f = {s: fn(perturbed(geom, s * eps)) for s in (-2, -1, 1, 2)}
    return (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * eps)


def check_gauge(*states, tol=GAUGE_TOL):
    for s in states:
        r = s.geom.frame_residual()
        if r > tol:
            raise GaugeError(f"frame non-orthonormality {r:.3g} at t={s.t:g} exceeds {tol:g}")


# ---------------------------------------------------------------------------
# Evolution residuals


def _pieces(eq, s0, s1, eps, form):
    geom, pair = s0.geom, s0.proj
    S = build_system_state(s0, need_B=eq in ("B", "Rhat", "That"))
    F0 = field_of(eq, geom, pair)
    dF = flow_derivative(geom, lambda g: field_of(eq, g, pair), eps)
    lap = geom.laplacian(F0) if eq in HEAT else 0.0
    rhs = rhs_of(eq, S, form)
    out = {"spatial": dF - lap - rhs, "norms": _rhs_norms(eq, S), "scale": sup(rhs)}
    if s1 is not None:
        dt = s1.t - s0.t
        if not dt > 0:
            raise InvalidInput("states must be consecutive in forward time")
        fd = (field_of(eq, s1.geom, pair) - F0) / dt
        out["temporal"] = fd - dF
        out["total"] = fd - lap - rhs
    return out


def _report(eq, kind, res, norms, tol):
    bound = sum(v for v in norms.values())
    r = sup(res)
    return ResidualReport(
        equation=eq,
        kind=kind,
        residual=r,
        norms=norms,
        C=r / bound if bound > 0 else 0.0,
        tolerance=tol,
        passed=bool(r < tol),
    )


def residual_evolution(eq, s0, s1=None, tol=5e-2, eps=1e-3, form="displayed"):
    """Reports for ``eq`` between consecutive states (the ``total`` one first).

    With ``s1 = None`` only the spatial residual is available.
    """
    if s0.proj is None and eq not in ("R", "T"):
        raise InvalidInput("the state carries no projection pair")
    check_gauge(*(s for s in (s0, s1) if s is not None))
    if s0.proj is None:
        n = s0.geom.n
        z = np.zeros(tuple(s0.geom.shape) + (n,) * 4)
        s0 = FlowState(s0.t, s0.geom, ProjectionPair(z, z))
    p = _pieces(eq, s0, s1, eps, form)
    kinds = ("total", "spatial", "temporal") if s1 is not None else ("spatial",)
    return [_report(eq, k, p[k], p["norms"], tol) for k in kinds]


def advance(state, dt):
    """One RK4 metric step carrying the projection (the ``t + dt`` state of a residual pair)."""
    return step_metric(state, FlowConfig(dt=dt, tEnd=dt, scheme="rk4-ode"))


def _level_residuals(eq, builder, N, dt, tol, eps, form):
    s0 = builder(N)
    reps = residual_evolution(eq, s0, advance(s0, dt), tol=tol, eps=eps, form=form)
    return {r.kind: r.residual for r in reps}, reps[0].norms


def refinement_study(eq, builder, levels=((32, 1e-4), (64, 2.5e-5)), tol=5e-2, eps=1e-3,
                     form="displayed", min_space=1.8, min_time=0.9, rerun=True, exact_tol=1e-12):
    """Spatial, temporal and total residuals on two ``(resolution, dt)`` levels.

    ``builder(resolution)`` returns the initial FlowState.  The spatial order
    uses the resolution ratio, the temporal order the ``dt`` ratio; pass
    requires both minimum orders and a total residual below ``tol`` on the
    finer level.  A finest-level total within ``2 tol`` triggers one more
    level (``2 N``, ``dt / 4``) and the orders are taken from the last two.
    Residuals below ``exact_tol`` on every level count as exact (order ``None``, pass).
    """
    levels = [tuple(l) for l in levels]
    if len(levels) != 2:
        raise InvalidInput("an order estimate uses exactly two refinement levels")
    res = {"total": [], "spatial": [], "temporal": []}
    norms = None
    for N, dt in levels:
        r, norms = _level_residuals(eq, builder, N, dt, tol, eps, form)
        for k in res:
            res[k].append(r[k])
    if rerun and tol <= res["total"][-1] < 2 * tol:
        N, dt = levels[-1]
        levels.append((2 * N, dt / 4))
        r, norms = _level_residuals(eq, builder, 2 * N, dt / 4, tol, eps, form)
        for k in res:
            res[k].append(r[k])
    (N0, dt0), (N1, dt1) = levels[-2:]
    o_space = observed_order(res["spatial"][-2], res["spatial"][-1], N1 / N0)
    o_time = observed_order(res["temporal"][-2], res["temporal"][-1], dt0 / dt1)
    o_total = observed_order(res["total"][-2], res["total"][-1], N1 / N0)
    exact = {k: max(v) < exact_tol for k, v in res.items()}
    space_ok = exact["spatial"] or (o_space is not None and o_space >= min_space)
    time_ok = exact["temporal"] or (o_time is not None and o_time >= min_time)
    bound = sum(norms.values())
    out = {}
    for kind, order, ok in (
        ("spatial", o_space, space_ok),
        ("temporal", o_time, time_ok),
        ("total", o_total, space_ok and time_ok and res["total"][-1] < tol),
    ):
        r = res[kind][-1]
        out[kind] = ResidualReport(eq, kind, r, norms, r / bound if bound else 0.0, tol,
                                   bool(ok), order, list(res[kind]))
    return out


# ---------------------------------------------------------------------------
# Commutator relations


def _flat(U, nb):
    return U.reshape(U.shape[:nb] + (-1,))


def comm_lambda(geom, U, k):
    """``[Lambda^a_b, nabla_c] U - delta_ac nabla_b U`` (exact identity)."""
    nb = len(geom.shape)
    n = geom.n
    DU = geom.covariant_derivative(U)
    lhs = W.lambda_action(DU, k + 1) - np.moveaxis(
        geom.covariant_derivative(W.lambda_action(U, k)), nb, nb + 2
    )
    rhs = np.einsum("ac,...bz->...abcz", np.eye(n), _flat(DU, nb + 1))
    return lhs.reshape(rhs.shape) - rhs


def comm_rho(geom, U, k):
    """``[rho_ab, nabla_c] U - (delta_ac nabla_b - delta_bc nabla_a) U`` with ``rho_ab = Lambda^a_b - Lambda^b_a``."""
    nb = len(geom.shape)
    n = geom.n
    DU = geom.covariant_derivative(U)
    lam_D = W.lambda_action(DU, k + 1)
    D_lam = np.moveaxis(geom.covariant_derivative(W.lambda_action(U, k)), nb, nb + 2)
    L = lam_D - D_lam
    L = L - np.swapaxes(L, nb, nb + 1)
    fD = _flat(DU, nb + 1)
    eye = np.eye(n)
    rhs = np.einsum("ac,...bz->...abcz", eye, fD) - np.einsum("bc,...az->...abcz", eye, fD)
    return L.reshape(rhs.shape) - rhs


def rhs_dt_nabla(geom, U, k):
    """``nabla_p R_pacb Lambda^b_c U + Rc_ac nabla_c U``."""
    nb = len(geom.shape)
    lam = _flat(W.lambda_action(U, k), nb + 2)
    DU = _flat(geom.covariant_derivative(U), nb + 1)
    out = np.einsum("...ppacb,...bcz->...az", geom.nabla_riemann, lam) + np.einsum(
        "...ac,...cz->...az", geom.ricci, DU
    )
    return out


def rhs_heat_nabla(geom, U, k):
    """``2 R_abdc Lambda^c_d nabla_b U + 2 Rc_ab nabla_b U`` with ``Lambda`` on every slot of ``nabla U``."""
    nb = len(geom.shape)
    DU = geom.covariant_derivative(U)
    lam = _flat(W.lambda_action(DU, k + 1), nb + 3)  # (c, d, b, z)
    return 2 * np.einsum("...abdc,...cdbz->...az", geom.riemann, lam) + 2 * np.einsum(
        "...ab,...bz->...az", geom.ricci, _flat(DU, nb + 1)
    )


def random_probe(geom, k, seed, modes=2):
    """Seeded smooth ``k``-tensor field, the same function at every resolution (constant on point models)."""
    rng = np.random.default_rng(seed)
    n = geom.n
    shape = tuple(geom.shape)
    U = np.broadcast_to(rng.standard_normal((n,) * k), shape + (n,) * k).copy()
    if isinstance(geom, GridGeometry):
        X = geom.grid.coords
        pad = (...,) + (None,) * k
        for ax in range(geom.grid.n):
            if geom.grid.shape[ax] == 1:
                continue
            for m in range(1, modes + 1):
                a, b = rng.standard_normal((2,) + (n,) * k)
                U = U + np.cos(m * X[ax])[pad] * a + np.sin(m * X[ax])[pad] * b
    return U


def commutator_pieces(geom, U, k, V=None, geom1=None, dt=None, eps=1e-3):
    """Residual arrays for the four relations; ``U(t) = U + (t - t0) V`` in the gauge."""
    nb = len(geom.shape)
    out = {"lambda": {"spatial": comm_lambda(geom, U, k)},
           "rho": {"spatial": comm_rho(geom, U, k)}}
    nab = lambda g: _flat(g.covariant_derivative(U), nb + 1)
    F0 = nab(geom)
    dF = flow_derivative(geom, nab, eps)
    DV = 0.0 if V is None else _flat(geom.covariant_derivative(V), nb + 1)
    r_dt = rhs_dt_nabla(geom, U, k)
    lapF = _flat(geom.laplacian(geom.covariant_derivative(U)), nb + 1)
    nab_lap = _flat(geom.covariant_derivative(geom.laplacian(U)), nb + 1)
    r_heat = rhs_heat_nabla(geom, U, k)
    out["dt"] = {"spatial": dF - r_dt, "scale": np.array([sup(dF), sup(r_dt)])}
    out["heat"] = {"spatial": dF - lapF + nab_lap - r_heat,
                   "scale": np.array([sup(dF), sup(lapF), sup(nab_lap), sup(r_heat)])}
    if geom1 is not None:
        U1 = U if V is None else U + dt * V
        fd = (_flat(geom1.covariant_derivative(U1), nb + 1) - F0) / dt
        out["dt"]["temporal"] = fd - DV - dF
        out["dt"]["total"] = fd - DV - r_dt
        out["heat"]["temporal"] = fd - DV - dF
        out["heat"]["total"] = fd - DV - lapF + nab_lap - r_heat
        for name in ("lambda", "rho"):
            out[name]["temporal"] = np.zeros(1)
            out[name]["total"] = out[name]["spatial"]
    return out


def default_probes(state, seed=0):
    """``Phat`` (when present) and a seeded random two-tensor with a seeded ``D_t``."""
    geom = state.geom
    probes = []
    if state.proj is not None:
        probes.append(("Phat", state.proj.Phat, 4, None))
    if not isinstance(geom, SymmetricGeometry):
        probes.append(("random", random_probe(geom, 2, seed), 2, random_probe(geom, 2, seed + 1)))
    else:
        n = geom.n
        probes.append(("metric", np.eye(n), 2, None))
    return probes


def check_commutators(s0, s1=None, probes=None, seed=0, tol=5e-2, eps=1e-3, kind=None):
    """One report per relation (max over probes).

    ``kind`` selects the judged residual; it defaults to ``total`` when ``s1``
    is given and ``spatial`` otherwise.
    """
    check_gauge(*(s for s in (s0, s1) if s is not None))
    if probes is None:
        probes = default_probes(s0, seed)
    dt = None if s1 is None else s1.t - s0.t
    worst = {}
    for _, U, k, V in probes:
        p = commutator_pieces(s0.geom, U, k, V, None if s1 is None else s1.geom, dt, eps)
        for name, d in p.items():
            for piece, arr in d.items():
                key = (name, piece)
                worst[key] = max(worst.get(key, 0.0), sup(arr))
    if kind is None:
        kind = "total" if s1 is not None else "spatial"
    reports = []
    for name in ("lambda", "rho", "dt", "heat"):
        r = worst[(name, kind)]
        lv = [worst[(name, k)] for k in ("spatial", "temporal") if (name, k) in worst]
        scale = worst.get((name, "scale"), 0.0)
        reports.append(ResidualReport(name, kind, r, {"scale": scale}, r / max(1.0, scale), tol,
                                      bool(r < tol), None, lv))
    return reports


def commutator_refinement(builder, levels=((32, 1e-4), (64, 2.5e-5)), seed=0, eps=1e-3,
                          exact_tol=1e-10, min_space=1.8, min_time=0.9):
    """Orders of the four relations across two levels.

    The ``lambda`` and ``rho`` relations are exact for the discrete operators,
    so they pass on round-off instead of an order.
    """
    vals = {}
    for N, dt in levels:
        s0 = builder(N)
        s1 = advance(s0, dt)
        check_gauge(s0, s1)
        for _, U, k, V in default_probes(s0, seed):
            p = commutator_pieces(s0.geom, U, k, V, s1.geom, dt, eps)
            for name, d in p.items():
                for piece, arr in d.items():
                    key = (name, piece, N)
                    vals[key] = max(vals.get(key, 0.0), sup(arr))
    (N0, dt0), (N1, dt1) = levels
    out = {}
    for name in ("lambda", "rho", "dt", "heat"):
        sp = [vals[(name, "spatial", N0)], vals[(name, "spatial", N1)]]
        tm = [vals[(name, "temporal", N0)], vals[(name, "temporal", N1)]]
        if name in ("lambda", "rho"):
            r = max(sp)
            out[name] = {
                "spatial": ResidualReport(name, "spatial", sp[1], {}, 0.0, exact_tol, bool(r < exact_tol), None, sp),
            }
            continue
        o_s = observed_order(sp[0], sp[1], N1 / N0)
        o_t = observed_order(tm[0], tm[1], dt0 / dt1)
        out[name] = {
            "spatial": ResidualReport(name, "spatial", sp[1], {}, 0.0, np.inf,
                                      bool(o_s is not None and o_s >= min_space), o_s, sp),
            "temporal": ResidualReport(name, "temporal", tm[1], {}, 0.0, np.inf,
                                       bool(o_t is not None and o_t >= min_time), o_t, tm),
        }
    return out


__all__ = [
    "EQUATIONS",
    "ResidualReport",
    "advance",
    "check_commutators",
    "check_gauge",
    "commutator_refinement",
    "field_of",
    "flow_derivative",
    "observed_order",
    "perturbed",
    "refinement_study",
    "residual_evolution",
    "rhs_of",
    "tensor_norm2",
]
