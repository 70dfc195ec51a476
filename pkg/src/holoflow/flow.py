"""Ricci flow of model metrics, with the evolved frame gauge and fiberwise extensions.

The frame ``E`` evolves by ``dE/dt = Rc# E`` alongside ``dg/dt = -2 Rc``, which
keeps ``E^T g E = I``.  In this gauge the time derivative of frame components
is ``D_t``, so a tensor with ``D_t U = 0`` has constant frame components.
Projections and adapted two-form bases are stored that way on ``FlowState``;
the coordinate-form ODEs below integrate the same extension independently.
"""
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import wedge as W
from .errors import (
    ConfigError,
    FlowSingularity,
    IntegrationAccuracyError,
    InvalidInput,
    InvalidMetric,
    InvalidState,
    PreconditionViolated,
)
from .holonomy import ProjectionPair, Subalgebra, projection_pair
from .models.base import lowdin, slot_sum
from .models.grid import GridGeometry

SCHEMES = ("rk4-ode", "explicit-fd", "semi-implicit-fd")


@dataclass(frozen=True)
class FlowConfig:
    dt: float
    tEnd: float
    scheme: str = "rk4-ode"
    cflSafety: float = 0.5
    outputEvery: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.tEnd < 0:
            raise ConfigError("tEnd must be non-negative")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not 0 < self.cflSafety < 1:
            raise ConfigError("cflSafety must lie in (0, 1)")
        if self.outputEvery < 1:
            raise ConfigError("outputEvery must be at least 1")
        steps = self.tEnd / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigError("tEnd must be an integer multiple of dt")

    @property
    def steps(self):
        return int(round(self.tEnd / self.dt))


@dataclass
class FlowState:
    """One time slice.  ``proj`` and ``basis`` are frame components in the evolved gauge."""

    t: float
    geom: object
    proj: ProjectionPair = None
    basis: np.ndarray = None  # (..., m, n, n), first ``k`` span H
    k: int = 0

    @property
    def frames(self):
        return self.geom.frames


def adapted_basis(H):
    """Orthonormal two-form basis whose first ``H.dim`` elements span ``H``."""
    m = W.dim_wedge2(H.n)
    c = H.coeffs
    if H.dim:
        q, _ = np.linalg.qr(np.vstack([c, np.eye(m)]).T)
        rest = q[:, H.dim:m].T
        full = np.vstack([c, rest])
    else:
        full = np.eye(m)
    return W.from_vec(full)


def initial_state(geom, H=None, t=0.0):
    """State with the pair and adapted basis of a constant-frame-component subalgebra ``H``."""
    if H is None:
        return FlowState(t, geom)
    if not isinstance(H, Subalgebra):
        raise InvalidInput("H must be a Subalgebra")
    pair = projection_pair(H)
    shape = tuple(geom.shape)
    n = geom.n
    pb = np.broadcast_to(pair.Pbar, shape + (n,) * 4).copy()
    ph = np.broadcast_to(pair.Phat, shape + (n,) * 4).copy()
    b = adapted_basis(H)
    basis = np.broadcast_to(b, shape + b.shape).copy()
    return FlowState(t, geom, ProjectionPair(pb, ph), basis, H.dim)


# ---------------------------------------------------------------------------
# Metric stepping


def flow_velocity(geom):
    """``(dg/dt, dE/dt) = (-2 Rc, Rc# E)`` in model coordinates."""
    return -2.0 * geom.ricci_coords, geom.ricci_sharp @ geom.frames


def cfl_limit(geom, safety):
    """Largest stable explicit step ``safety h^2 / (2 n max|g^-1|)`` on a grid; ``inf`` otherwise."""
    if not isinstance(geom, GridGeometry):
        return np.inf
    h = min(hh for hh, N in zip(geom.grid.spacing, geom.grid.shape) if N > 1)
    ginv = float(np.max(np.abs(geom.inverse_metric)))
    return safety * h * h / (2 * geom.n * ginv)


def check_cfl(geom, config):
    if config.scheme == "semi-implicit-fd":
        return
    lim = cfl_limit(geom, config.cflSafety)
    if config.dt > lim:
        raise ConfigError(f"dt={config.dt:.3g} exceeds the CFL limit {lim:.3g}")


def _rebuild(geom, g, E, t):
    if not np.all(np.isfinite(g)):
        raise FlowSingularity("metric became non-finite", t)
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise FlowSingularity("metric lost positivity", t)
    try:
        return geom.with_state(g, lowdin(E, g))
    except InvalidMetric as exc:
        raise FlowSingularity(str(exc), t) from exc


def _rk4(geom, dt, t):
    g0, E0 = geom.metric, geom.frames
    k1 = flow_velocity(geom)
    s2 = _rebuild(geom, g0 + dt / 2 * k1[0], E0 + dt / 2 * k1[1], t + dt / 2)
    k2 = flow_velocity(s2)
    s3 = _rebuild(geom, g0 + dt / 2 * k2[0], E0 + dt / 2 * k2[1], t + dt / 2)
    k3 = flow_velocity(s3)
    s4 = _rebuild(geom, g0 + dt * k3[0], E0 + dt * k3[1], t + dt)
    k4 = flow_velocity(s4)
    g = g0 + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    E = E0 + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return _rebuild(geom, g, E, t + dt)


def _euler(geom, dt, t):
    dg, dE = flow_velocity(geom)
    return _rebuild(geom, geom.metric + dt * dg, geom.frames + dt * dE, t + dt)


def _periodic_diff_matrix(N, h):
    if N == 1:
        return sp.csr_matrix((1, 1))
    D = sp.diags([np.full(N - 1, 1.0), np.full(N - 1, -1.0)], [1, -1], shape=(N, N), format="lil")
    D[0, N - 1] = -1.0
    D[N - 1, 0] = 1.0
    return D.tocsr() / (2 * h)


def _grid_diff_matrices(grid):
    mats = []
    for ax, (N, h) in enumerate(zip(grid.shape, grid.spacing)):
        factors = [sp.identity(M, format="csr") for M in grid.shape]
        factors[ax] = _periodic_diff_matrix(N, h)
        out = factors[0]
        for f in factors[1:]:
            out = sp.kron(out, f, format="csr")
        mats.append(out)
    return mats


def _semi_implicit(geom, dt, t):
    """Lagged step: ``g^kl d_k d_l`` of each metric component implicit, the rest explicit."""
    grid = geom.grid
    n = geom.n
    P = int(np.prod(grid.shape))
    D = _grid_diff_matrices(grid)
    ginv = geom.inverse_metric.reshape(P, n, n)
    L = sp.csr_matrix((P, P))
    for k in range(n):
        for l in range(n):
            if grid.shape[k] > 1 and grid.shape[l] > 1:
                L = L + sp.diags(ginv[:, k, l]) @ (D[k] @ D[l])
    lu = splu((sp.identity(P) - dt * L).tocsc())
    dg, dE = flow_velocity(geom)
    g0 = geom.metric.reshape(P, n * n)
    rhs = g0 + dt * (dg.reshape(P, n * n) - L @ g0)
    g = lu.solve(rhs).reshape(geom.metric.shape)
    return _rebuild(geom, g, geom.frames + dt * dE, t + dt)


def step_metric(state, config):
    """Advance one step of ``dg/dt = -2 Rc`` with the gauge frames.

    Projection and basis frame components are carried unchanged, which is
    their ``D_t``-parallel extension.
    """
    geom = state.geom
    if isinstance(geom, GridGeometry):
        check_cfl(geom, config)
        stepper = {"rk4-ode": _rk4, "explicit-fd": _euler, "semi-implicit-fd": _semi_implicit}[
            config.scheme
        ]
    else:
        stepper = _rk4  # homogeneous models reduce to coefficient ODEs
    new = stepper(geom, config.dt, state.t)
    return replace(state, t=state.t + config.dt, geom=new)


@dataclass
class Trajectory:
    """Every step of a forward run, with Hermite midpoint geometries on demand."""

    states: list
    config: FlowConfig
    failure: float = None
    _mids: dict = field(default_factory=dict, repr=False)

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def outputs(self):
        """Indices of output slices (every ``outputEvery`` steps plus the last)."""
        idx = list(range(0, len(self.states), self.config.outputEvery))
        if idx[-1] != len(self.states) - 1:
            idx.append(len(self.states) - 1)
        return idx

    def midpoint(self, k):
        """Geometry at ``(t_k + t_k+1) / 2`` from cubic Hermite interpolation of the metric."""
        if k not in self._mids:
            a, b = self.states[k].geom, self.states[k + 1].geom
            dt = self.states[k + 1].t - self.states[k].t
            ga, gb = a.metric, b.metric
            g = 0.5 * (ga + gb) + dt / 8 * (-2 * a.ricci_coords + 2 * b.ricci_coords)
            E = 0.5 * (a.frames + b.frames)
            self._mids[k] = a.with_state(g, lowdin(E, g))
        return self._mids[k]


def run_flow(state, config):
    """Integrate to ``config.tEnd``; a singularity ends the run early and sets ``failure``."""
    states = [state]
    failure = None
    for _ in range(config.steps):
        try:
            states.append(step_metric(states[-1], config))
        except FlowSingularity as exc:
            failure = exc.t
            break
    return Trajectory(states, config, failure)


# ---------------------------------------------------------------------------
# Fiberwise ODE extensions in coordinate components


def _fiber_rk4(traj, U0, rhs, start, stop):
    """RK4 for ``dU/dt = rhs(geom, U)`` between trajectory nodes, either direction."""
    out = [U0]
    U = U0
    step = 1 if stop >= start else -1
    for k in range(start, stop, step):
        lo = min(k, k + step)
        h = traj.states[k + step].t - traj.states[k].t
        ga, gm, gb = traj.states[k].geom, traj.midpoint(lo), traj.states[k + step].geom
        k1 = rhs(ga, U)
        k2 = rhs(gm, U + h / 2 * k1)
        k3 = rhs(gm, U + h / 2 * k2)
        k4 = rhs(gb, U + h * k3)
        U = U + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(U)
    return out


def projection_rhs(geom, P):
    """``-R_ap P_pbcd - R_bp P_apcd - R_cp P_abpd - R_dp P_abcp`` (coordinates, indices raised by g)."""
    return -slot_sum(P, geom.ricci_sharp, len(geom.shape), 4)


def evolve_projection_ode(traj, pair, start=0, stop=None, tol=1e-6):
    """Extend a pair given in frame components at node ``start`` to node ``stop`` by the projection ODE.

    Integration runs backward when ``stop < start``.  Returns frame-component
    pairs (in each node's gauge frame) ordered from ``start`` to ``stop``.
    """
    stop = len(traj.states) - 1 if stop is None else stop
    g0 = traj.states[start].geom
    nb = len(g0.shape)
    coords = np.stack([g0.to_coords(pair.Pbar, 4), g0.to_coords(pair.Phat, 4)], axis=nb)

    def rhs(geom, U):
        return -slot_sum(U, geom.ricci_sharp[..., None, :, :], nb + 1, 4)

    series = _fiber_rk4(traj, coords, rhs, start, stop)
    step = 1 if stop >= start else -1
    out = []
    for U, j in zip(series, range(start, stop + step, step)):
        geom = traj.states[j].geom
        pb = geom.to_frame(np.take(U, 0, axis=nb), 4)
        ph = geom.to_frame(np.take(U, 1, axis=nb), 4)
        p = ProjectionPair(pb, ph)
        drift = p.invariant_residual()
        if drift > tol:
            raise IntegrationAccuracyError(
                f"projection invariants drifted to {drift:.3g} at t={traj.states[j].t:.6g}",
                traj.states[j].t,
            )
        out.append(p)
    return out


def basis_operator(geom, f):
    """``L(f) - Rm(f)`` for frame-component two-forms ``f`` of shape ``(..., A, n, n)``.

    ``L(f) = M_BC [[f, phi^C], phi^B]`` with ``R_abcd = -M_AB phi^A_ab phi^B_cd`` in
    the canonical basis.  This equals ``-Rc_aq f_qb - Rc_bq f_aq``.
    """
    n = geom.n
    phi = W.basis(n)
    R = geom.riemann
    M = -0.25 * np.einsum("...abcd,Aab,Bcd->...AB", R, phi, phi)
    fc = np.einsum("...Aab,Cbc->...ACac", f, phi) - np.einsum("Cab,...Abc->...ACac", phi, f)
    L = np.einsum("...BC,...ACab,Bbc->...Aac", M, fc, phi) - np.einsum(
        "...BC,Bab,...ACbc->...Aac", M, phi, fc
    )
    Rm = np.einsum("...abcd,...Aab->...Acd", W.curvature_endo(R), f)
    return L - Rm


def _basis_to_frame(geom, phi):
    E = geom.frames[..., None, :, :]
    return np.einsum("...ia,...ij,...jb->...ab", E, phi, E)


def _basis_to_coords(geom, f):
    th = geom.coframes[..., None, :, :]
    return np.einsum("...ai,...ab,...bj->...ij", th, f, th)


def basis_rhs(geom, phi):
    return _basis_to_coords(geom, basis_operator(geom, _basis_to_frame(geom, phi)))


def basis_gram(geom, phi):
    """``<phi^A, phi^B>_g`` for coordinate two-forms."""
    f = _basis_to_frame(geom, phi)
    return 0.5 * np.einsum("...Aab,...Bab->...AB", f, f)


@dataclass
class BasisReport:
    times: np.ndarray
    orthonormality: np.ndarray  # max |<phi^A, phi^B> - delta| per output
    cross_block: np.ndarray  # max cross-block coefficient of d phi / dt per output
    pbar_mismatch: np.ndarray = None  # vs the projection ODE, when supplied
    frames: list = field(default_factory=list, repr=False)  # frame components per output


def evolve_adapted_basis(traj, basis, k, pairs=None, tol=1e-6):
    """Integrate ``d phi^A / dt = L(phi^A) - Rm(phi^A)`` for an adapted basis given in frame components.

    The first ``k`` elements span ``H``.  ``pairs`` (frame-component projection
    pairs at every node, e.g. from ``evolve_projection_ode``) enables the
    reconstruction check ``Pbar = sum_{A <= k} phi^A (x) phi^A``.
    """
    g0 = traj.states[0].geom
    m = W.dim_wedge2(g0.n)
    gram0 = 0.5 * np.einsum("...Aab,...Bab->...AB", basis, basis)
    if np.max(np.abs(gram0 - np.eye(m))) > tol:
        raise InvalidState("adapted basis is not orthonormal")
    phi0 = _basis_to_coords(g0, basis)
    series = _fiber_rk4(traj, phi0, basis_rhs, 0, len(traj.states) - 1)
    times, ortho, cross, mism, frames = [], [], [], [], []
    for j in traj.outputs:
        geom = traj.states[j].geom
        phi = series[j]
        f = _basis_to_frame(geom, phi)
        gram = 0.5 * np.einsum("...Aab,...Bab->...AB", f, f)
        dev = float(np.max(np.abs(gram - np.eye(m))))
        if dev > tol:
            raise InvalidState(f"adapted basis lost orthonormality ({dev:.3g})")
        coeff = 0.5 * np.einsum("...Aab,...Bab->...AB", basis_operator(geom, f), f)
        c = float(max(np.max(np.abs(coeff[..., :k, k:]), initial=0.0),
                      np.max(np.abs(coeff[..., k:, :k]), initial=0.0)))
        times.append(traj.states[j].t)
        ortho.append(dev)
        cross.append(c)
        frames.append(f)
        if pairs is not None:
            pb = 0.5 * np.einsum("...Aab,...Acd->...abcd", f[..., :k, :, :], f[..., :k, :, :])
            mism.append(float(np.max(np.abs(pb - pairs[j].Pbar))))
    return BasisReport(np.array(times), np.array(ortho), np.array(cross),
                       np.array(mism) if pairs is not None else None, frames)


# ---------------------------------------------------------------------------
# Parabolic extension


def tensor_norm2(U, k):
    """Full-sum squared norm over the trailing ``k`` slots."""
    return np.sum(U.reshape(U.shape[: U.ndim - k] + (-1,)) ** 2, axis=-1)


def bernstein_quantity(geom, Phat, L):
    """``(L + |Phat|^2) |nabla Phat|^2`` pointwise."""
    A = geom.covariant_derivative(Phat)
    return (L + tensor_norm2(Phat, 4)) * tensor_norm2(A, 5)


@dataclass
class ParabolicSeries:
    times: np.ndarray
    Phat: list
    bernstein_max: np.ndarray
    L: float


def parabolic_extend_projection(traj, Phat0, L=None, parallel_tol=1e-6, require_parallel=True):
    """Solve ``(d/dt - Delta) Phat = -Rc * Phat`` forward along a grid trajectory.

    In the gauge frames this is the heat equation ``d/dt Phat = Delta Phat``
    on frame components, stepped by explicit Euler under the CFL limit.
    ``L`` defaults to ``4 sup |Phat(0)|^2``.
    """
    geom0 = traj.states[0].geom
    if not isinstance(geom0, GridGeometry):
        raise InvalidInput("the parabolic extension needs a grid model")
    dt = traj.config.dt
    lim = cfl_limit(geom0, traj.config.cflSafety)
    if dt > lim:
        raise ConfigError(f"dt={dt:.3g} exceeds the CFL limit {lim:.3g}")
    Ph = np.asarray(Phat0, dtype=float)
    if require_parallel:
        a = float(np.max(np.abs(geom0.covariant_derivative(Ph))))
        if a > parallel_tol:
            raise PreconditionViolated(f"initial Phat is not parallel (|nabla Phat| = {a:.3g})")
    if L is None:
        L = 4.0 * float(np.max(tensor_norm2(Ph, 4)))
    series = [Ph]
    for s in traj.states[:-1]:
        Ph = Ph + dt * s.geom.laplacian(Ph)
        series.append(Ph)
    idx = traj.outputs
    bmax = np.array([float(np.max(bernstein_quantity(traj.states[j].geom, series[j], L))) for j in idx])
    return ParabolicSeries(traj.times[idx], [series[j] for j in idx], bmax, L)
