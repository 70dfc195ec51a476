"""Scenario files and the holonomy-preservation experiment.

A scenario is a YAML mapping::

    name: product-s2xs2
    model: {kind: product, factors: [[sphere, 2, 1.0], [sphere, 2, 1.0]]}
    H: {source: ambrose-singer, at: terminal}     # or {source: explicit, forms: [[0, 2]]}
    flow: {dt: 1.0e-3, tEnd: 0.05, scheme: rk4-ode, outputEvery: 5}
    kmax: 2
    seed: 0

The experiment runs the flow, takes ``H`` from the requested slice, extends
the projection pair to every node by the projection ODE, and records the
composite fields and the holonomy algebra generated at each output time.
"""
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .. import wedge as W
from ..errors import ConfigError, IntegrationAccuracyError, InvalidInput
from ..flow import (
    FlowConfig,
    FlowState,
    Trajectory,
    adapted_basis,
    evolve_adapted_basis,
    evolve_projection_ode,
    initial_state,
    parabolic_extend_projection,
    run_flow,
    step_metric,
)
from ..holonomy import (
    ProjectionPair,
    ambrose_singer_seeds,
    detect_complex_structure,
    generate_algebra,
    invariant_subspaces,
    projection_pair,
    span,
    tvan_residuals,
)
from ..models.config import build_model
from ..models.grid import GridGeometry
from .residuals import EQUATIONS, check_commutators, residual_evolution
from .system import build_system_state

CSV_COLUMNS = (
    "t", "sup_Rm_Phat", "sup_nabla_Phat", "sup_A", "sup_B", "dim_hol", "minEig_g", "K0", "K1", "K2",
)
TOLERANCES = {
    "projection": 1e-7,
    "tvan": 1e-8,
    "vanishing": 1e-6,
    "complex": 1e-8,
    "containment": 1e-6,
    "basis": 1e-7,
    "identityExact": 1e-8,
    "identityGrid": 5e-2,
    "algebraic": 1e-10,
}


# ---------------------------------------------------------------------------
# Scenarios


@dataclass
class Scenario:
    name: str
    model: dict
    flow: dict
    H: dict = field(default_factory=lambda: {"source": "ambrose-singer", "at": "terminal"})
    kmax: int = 2
    point: tuple = None
    seed: int = 0
    description: str = ""
    tolerances: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def geometry(self):
        return build_model(self.model)

    def flow_config(self):
        try:
            return FlowConfig(**self.flow)
        except TypeError as exc:
            raise ConfigError(f"bad flow block: {exc}") from exc

    def tol(self, key):
        return float(self.tolerances.get(key, TOLERANCES[key]))

    def to_dict(self):
        return {
            "name": self.name,
            "description": self.description,
            "model": self.model,
            "flow": self.flow,
            "H": self.H,
            "kmax": self.kmax,
            "point": None if self.point is None else list(self.point),
            "seed": self.seed,
        }


def _scenario_files():
    root = resources.files("holoflow") / "scenarios"
    return {Path(p.name).stem: p for p in root.iterdir() if p.name.endswith(".yaml")}


def list_scenarios():
    """``(name, description)`` of the bundled scenarios, sorted by name."""
    out = []
    for name, path in sorted(_scenario_files().items()):
        data = yaml.safe_load(path.read_text())
        out.append((name, data.get("description", "")))
    return out


def scenario_from_dict(data, name=None):
    if not isinstance(data, dict):
        raise ConfigError("a scenario must be a mapping")
    known = {"name", "model", "flow", "H", "kmax", "point", "seed", "description", "tolerances", "checks"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
    for key in ("model", "flow"):
        if key not in data:
            raise ConfigError(f"scenario needs a '{key}' block")
    kw = dict(data)
    kw["name"] = kw.get("name") or name or "unnamed"
    if kw.get("point") is not None:
        kw["point"] = tuple(int(i) for i in kw["point"])
    return Scenario(**kw)


def load_scenario(name=None, path=None, overrides=None):
    """Bundled scenario by ``name`` or a YAML file at ``path``, then apply ``overrides``.

    ``overrides`` may set ``dt``, ``tEnd``, ``resolution``, ``seed`` and ``kmax``.
    """
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path} is not valid YAML: {exc}") from exc
        sc = scenario_from_dict(data, Path(path).stem)
    else:
        files = _scenario_files()
        if name not in files:
            raise ConfigError(f"unknown scenario {name!r}; available: {', '.join(sorted(files))}")
        sc = scenario_from_dict(yaml.safe_load(files[name].read_text()), name)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in ("dt", "tEnd"):
            sc.flow = dict(sc.flow, **{key: float(val)})
        elif key == "resolution":
            sc.model = dict(sc.model, resolution=int(val))
        elif key in ("seed", "kmax"):
            setattr(sc, key, int(val))
        else:
            raise ConfigError(f"unknown override {key!r}")
    sc.flow_config()  # validate early
    return sc


# ---------------------------------------------------------------------------
# Holonomy along the flow


def base_point(geom, point=None):
    """Scenario point, or the grid node of largest curvature (ties to the first)."""
    if not isinstance(geom, GridGeometry):
        return ()
    if point is not None:
        if len(point) != len(geom.shape):
            raise InvalidInput(f"point {point} does not match grid {geom.shape}")
        return tuple(int(i) % N for i, N in zip(point, geom.shape))
    mag = np.sum(geom.riemann.reshape(geom.shape + (-1,)) ** 2, axis=-1)
    return tuple(int(i) for i in np.unravel_index(int(np.argmax(mag)), geom.shape))


def holonomy_at(geom, p, kmax):
    """Algebra generated by curvature and its derivatives up to ``kmax`` at ``p``."""
    seeds = ambrose_singer_seeds(geom, p, kmax)
    return generate_algebra(seeds), seeds


def explicit_subalgebra(n, spec):
    if "forms" in spec:
        forms = [W.e_wedge(int(i), int(j), n) for i, j in spec["forms"]]
    elif "coeffs" in spec:
        forms = list(W.from_vec(np.atleast_2d(np.asarray(spec["coeffs"], float))))
    else:
        raise ConfigError("explicit H needs 'forms' or 'coeffs'")
    H = span(np.array(forms).reshape(-1, n, n), n)
    if H.dim and H.closure_residual() > 1e-10:
        raise ConfigError("explicit H is not closed under the bracket")
    return H


def _broadcast_pair(pair, shape):
    n = pair.n
    return ProjectionPair(
        np.broadcast_to(pair.Pbar, tuple(shape) + (n,) * 4).copy(),
        np.broadcast_to(pair.Phat, tuple(shape) + (n,) * 4).copy(),
    )


def complex_structure_residual(H, J):
    if J is None:
        return None
    n = H.n
    comm = np.einsum("kij,jl->kil", H.basis, J) - np.einsum("ij,kjl->kil", J, H.basis)
    return float(max(np.max(np.abs(J @ J + np.eye(n))), np.max(np.abs(comm), initial=0.0)))


def _sup(U):
    return float(np.max(np.abs(U), initial=0.0))


def _sup_norm(U, k):
    return float(np.sqrt(np.max(np.sum(U.reshape(U.shape[: U.ndim - k] + (-1,)) ** 2, axis=-1))))


@dataclass
class ExperimentReport:
    scenario: str
    H_dim: int
    H_source: str
    base_point: tuple
    rows: list
    checks: dict
    passed: bool
    failure_time: float = None
    basis: dict = None

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "H": {"dim": self.H_dim, "source": self.H_source},
            "basePoint": list(self.base_point),
            "rows": self.rows,
            "checks": self.checks,
            "pass": bool(self.passed),
            "failureTime": self.failure_time,
            "basis": self.basis,
        }


def initial_H(sc, geom, p):
    """``H`` for checks at ``t = 0``: the explicit one or the algebra generated there."""
    spec = dict(sc.H or {})
    if spec.get("source", "ambrose-singer") == "explicit":
        return explicit_subalgebra(geom.n, spec)
    return holonomy_at(geom, p, sc.kmax)[0]


def _resolve_H(sc, traj, p):
    spec = dict(sc.H or {})
    source = spec.get("source", "ambrose-singer")
    n = traj.states[0].geom.n
    if source == "explicit":
        return explicit_subalgebra(n, spec), "explicit", None
    if source != "ambrose-singer":
        raise ConfigError(f"unknown H source {source!r}")
    at = spec.get("at", "terminal")
    if at not in ("terminal", "initial"):
        raise ConfigError("H.at must be 'terminal' or 'initial'")
    j = len(traj.states) - 1 if at == "terminal" else 0
    H, _ = holonomy_at(traj.states[j].geom, p, sc.kmax)
    return H, f"ambrose-singer@{at}", j


def _extend_pairs(sc, traj, p):
    """Resolve H and extend its pair to every node.

    After a flow singularity the fixed-step extension loses accuracy as the
    curvature blows up; the trajectory is then cut before the first inaccurate
    node and the cut time returned, so the report covers the usable part.
    """
    cut = None
    while True:
        last = len(traj.states) - 1
        H, source, node = _resolve_H(sc, traj, p)
        pair = _broadcast_pair(projection_pair(H), traj.states[0].geom.shape)
        start = last if node == last else 0
        try:
            pairs = evolve_projection_ode(traj, pair, start=start, stop=last - start, tol=1e-6)
        except IntegrationAccuracyError as exc:
            keep = [s for s in traj.states if s.t < exc.t - 1e-12]
            if traj.failure is None or exc.t is None or len(keep) < 2:
                raise
            traj = Trajectory(keep, traj.config, traj.failure)
            cut = exc.t
            continue
        if start == last:
            pairs = pairs[::-1]
        return traj, H, source, pairs, cut


def holonomy_preservation_experiment(sc, with_basis=True, on_output=None):
    """Run a scenario and record holonomy data at every output time.

    ``on_output(k, state)`` is called for each output slice with the state
    carrying its projection pair (used for checkpoints).
    """
    geom0 = sc.geometry()
    cfg = sc.flow_config()
    traj = run_flow(FlowState(0.0, geom0), cfg)
    p = base_point(geom0, sc.point)
    traj, H, source, pairs, cut = _extend_pairs(sc, traj, p)
    n = geom0.n

    rows = []
    dims, blocks_all = [], []
    worst = {"projection": 0.0, "tvan": 0.0, "containment": 0.0, "complex": 0.0}
    for j in traj.outputs:
        st = traj.states[j]
        geom = st.geom
        cur = FlowState(st.t, geom, pairs[j])
        if on_output is not None:
            on_output(len(rows), cur)
        S = build_system_state(cur)
        hol, seeds = holonomy_at(geom, p, sc.kmax)
        blocks = sorted((b.shape[1] for b in invariant_subspaces(hol)), reverse=True)
        J = detect_complex_structure(hol) if n % 2 == 0 and hol.dim else None
        cres = complex_structure_residual(hol, J)
        contain = H.contains(seeds) if H.dim or len(seeds) else 0.0
        K = geom.curvature_derivatives(2)
        proj_res = pairs[j].invariant_residual()
        tv = max(tvan_residuals(pairs[j]))
        worst["projection"] = max(worst["projection"], proj_res)
        worst["tvan"] = max(worst["tvan"], tv)
        worst["containment"] = max(worst["containment"], float(contain))
        if cres is not None:
            worst["complex"] = max(worst["complex"], cres)
        dims.append(hol.dim)
        blocks_all.append(blocks)
        norms = S.norms()
        rows.append({
            "t": float(st.t),
            "sup_Rm_Phat": _sup_norm(S.Rhat, 4),
            "sup_nabla_Phat": _sup_norm(S.A, 5),
            "sup_A": _sup(S.A),
            "sup_B": _sup(S.B),
            "dim_hol": int(hol.dim),
            "blocks": blocks,
            "kahler": J is not None,
            "minEig_g": geom.min_eigenvalue(),
            "K0": _sup_norm(K[0], 4),
            "K1": _sup_norm(K[1], 5),
            "K2": _sup_norm(K[2], 6),
            "X": norms["X"],
            "Y": norms["Y"],
            "projectionResidual": proj_res,
            "tvan": tv,
            "containment": float(contain),
        })

    preserving = source.startswith("ambrose-singer")
    checks = {
        "projectionInvariants": {"value": worst["projection"], "tol": sc.tol("projection"),
                                 "pass": worst["projection"] <= sc.tol("projection")},
        "tvan": {"value": worst["tvan"], "tol": sc.tol("tvan"), "pass": worst["tvan"] <= sc.tol("tvan")},
    }
    if preserving:
        vmax = max(max(r["sup_Rm_Phat"], r["sup_nabla_Phat"]) for r in rows)
        checks["constantStructure"] = {
            "dims": sorted(set(dims)),
            "blocks": [list(b) for b in {tuple(b) for b in blocks_all}],
            "pass": len(set(dims)) == 1 and len({tuple(b) for b in blocks_all}) == 1,
        }
        checks["vanishing"] = {"value": vmax, "tol": sc.tol("vanishing"), "pass": vmax < sc.tol("vanishing")}
        checks["containment"] = {"value": worst["containment"], "tol": sc.tol("containment"),
                                 "pass": worst["containment"] <= sc.tol("containment")}
        if any(r["kahler"] for r in rows):
            checks["complexStructure"] = {"value": worst["complex"], "tol": sc.tol("complex"),
                                          "pass": all(r["kahler"] for r in rows)
                                          and worst["complex"] < sc.tol("complex")}
        x0 = rows[0]["X"] + rows[0]["Y"]
        xs = max(r["X"] + r["Y"] for r in rows)
        floor = sc.tol("vanishing")
        checks["noActivation"] = {"value": xs, "bound": 10 * (x0 + floor), "pass": xs <= 10 * (x0 + floor)}

    basis = None
    if with_basis:
        b = np.broadcast_to(adapted_basis(H), tuple(geom0.shape) + (W.dim_wedge2(n), n, n)).copy()
        # the adapted basis is evolved forward from t = 0, where H has the same frame components
        rep = evolve_adapted_basis(traj, b, H.dim, pairs=pairs)
        basis = {
            "orthonormality": float(np.max(rep.orthonormality)),
            "crossBlock": float(np.max(rep.cross_block)),
            "pbarMismatch": float(np.max(rep.pbar_mismatch)),
        }
        if preserving:
            checks["basisBlocks"] = {"value": basis["crossBlock"], "tol": sc.tol("basis"),
                                     "pass": basis["crossBlock"] < sc.tol("basis")}
    if traj.failure is not None:
        checks["flow"] = {"failureTime": traj.failure, "accurateUntil": cut, "pass": False}
    passed = all(c["pass"] for c in checks.values())
    return ExperimentReport(sc.name, H.dim, source, p, rows, checks, bool(passed), traj.failure, basis)


def csv_lines(report):
    """CSV text rows (header first) in the fixed column order."""
    lines = [",".join(CSV_COLUMNS)]
    for r in report.rows:
        vals = []
        for c in CSV_COLUMNS:
            v = r[c]
            vals.append(str(v) if isinstance(v, int) else f"{v:.12e}")
        lines.append(",".join(vals))
    return lines


def shi_constants(report, delta_frac=0.01):
    """Observed ``sup`` of ``|Rm|``, ``|nabla Rm|``, ``|nabla^2 Rm|`` over ``[delta, T]``."""
    rows = report.rows
    T = rows[-1]["t"]
    sel = [r for r in rows if r["t"] >= delta_frac * T - 1e-14] or rows
    return {k: max(r[k] for r in sel) for k in ("K0", "K1", "K2")}


# ---------------------------------------------------------------------------
# Identities at the initial slice


def _entry(group, name, residual, tol, **extra):
    return dict({"group": group, "name": name, "residual": float(residual), "tolerance": float(tol),
                 "pass": bool(residual < tol)}, **extra)


def _identity_entries(sc, geom, cfg):
    grid = isinstance(geom, GridGeometry)
    eps = 1e-3 if grid else 3e-5
    tol = sc.tol("identityGrid") if grid else sc.tol("identityExact")
    p = base_point(geom, sc.point)
    H = initial_H(sc, geom, p)
    s0 = initial_state(geom, H)
    s1 = step_metric(s0, cfg)
    entries = []
    for eq in EQUATIONS:
        total, spatial, temporal = residual_evolution(eq, s0, s1, eps=eps)
        rel = spatial.residual / max(1.0, sum(spatial.norms.values()))
        entries.append(_entry("evolution", eq, rel, tol, absolute=spatial.residual,
                              total=total.residual, temporal=temporal.residual))
    comm = check_commutators(s0, s1, seed=sc.seed, eps=eps, kind="spatial")
    for r in comm:
        entries.append(_entry("commutator", r.equation, r.C, tol, absolute=r.residual))
    alg = sc.tol("algebraic")
    pair = s0.proj
    pt = ProjectionPair(pair.Pbar[p], pair.Phat[p])
    R = geom.riemann[p]
    T = geom.nabla_riemann[p]
    scale = max(1.0, float(np.max(np.abs(R))) ** 2, float(np.max(np.abs(T))) ** 2)
    entries.append(_entry("reaction", "Q o Phat", W.qcomp_identity(R, pt) / scale, alg))
    entries.append(_entry("reaction", "S o (Id x Phat)", W.scomp_identity(R, T, pt) / scale, alg))
    entries.append(_entry("projection", "invariants", pair.invariant_residual(), alg))
    entries.append(_entry("projection", "tvan", max(tvan_residuals(pair)), alg))
    return entries, {"H": {"dim": H.dim}, "basePoint": list(p), "eps": eps, "dt": cfg.dt}


def identity_suite(sc):
    """Evolution equations, commutator relations and reaction identities at ``t = 0``.

    Evolution and commutator entries are judged on the spatial residual (the
    exact flow derivative against the right-hand side), relative to the size
    of the terms involved.  The one-step total and temporal residuals are
    recorded alongside.  On a grid, a failure within twice its tolerance
    triggers one rerun at double resolution and a quarter of the step.
    """
    geom = sc.geometry()
    cfg = sc.flow_config()
    entries, meta = _identity_entries(sc, geom, cfg)
    refined = False
    near = [e for e in entries if not e["pass"]]
    if isinstance(geom, GridGeometry) and near and all(e["residual"] < 2 * e["tolerance"] for e in near):
        res = max(N for N in geom.shape)
        fine = Scenario(**{**sc.__dict__, "model": dict(sc.model, resolution=2 * res)})
        cfg = FlowConfig(cfg.dt / 4, cfg.dt / 4, cfg.scheme, cfg.cflSafety, 1)
        entries, meta = _identity_entries(fine, fine.geometry(), cfg)
        refined = True
    return dict(scenario=sc.name, entries=entries, refined=refined,
                **meta, **{"pass": all(e["pass"] for e in entries)})


# ---------------------------------------------------------------------------
# Inequalities and the parabolic extension


def system_series(sc, resolution=None, every=1):
    """SystemStates along the scenario flow with ``D_t``-parallel Phat from the scenario H at t = 0."""
    if resolution is not None:
        sc = Scenario(**{**sc.__dict__, "model": dict(sc.model, resolution=int(resolution))})
    geom0 = sc.geometry()
    cfg = sc.flow_config()
    traj = run_flow(FlowState(0.0, geom0), cfg)
    p = base_point(geom0, sc.point)
    H, _, _ = _resolve_H(sc, traj, p)
    pair = _broadcast_pair(projection_pair(H), geom0.shape)
    out = []
    for j in range(0, len(traj.states), every):
        st = traj.states[j]
        out.append(build_system_state(FlowState(st.t, st.geom, pair)))
    if (len(traj.states) - 1) % every:
        st = traj.states[-1]
        out.append(build_system_state(FlowState(st.t, st.geom, pair)))
    return out


def parabolic_experiment(sc):
    """Heat-extended vs ODE-extended Phat and the Bernstein maximum along a grid scenario."""
    geom0 = sc.geometry()
    cfg = sc.flow_config()
    traj = run_flow(FlowState(0.0, geom0), cfg)
    p = base_point(geom0, sc.point)
    H, _, _ = _resolve_H(sc, traj, p)
    pair = _broadcast_pair(projection_pair(H), geom0.shape)
    ode = evolve_projection_ode(traj, pair)
    series = parabolic_extend_projection(traj, pair.Phat)
    diffs = [float(np.max(np.abs(ph - ode[j].Phat))) for ph, j in zip(series.Phat, traj.outputs)]
    b = series.bernstein_max
    increase = float(np.max(np.diff(b), initial=0.0))
    idem = max(
        float(np.max(np.abs(W.compose(ph, ph) - ph))) for ph in series.Phat
    )
    grad = max(float(np.max(np.abs(traj.states[j].geom.covariant_derivative(ph))))
               for ph, j in zip(series.Phat, traj.outputs))
    return {
        "times": [float(t) for t in series.times],
        "maxDiff": max(diffs),
        "bernsteinMax": [float(v) for v in b],
        "bernsteinIncrease": increase,
        "L": float(series.L),
        "idempotence": idem,
        "gradient": grad,
    }


def finite(x):
    return x is not None and math.isfinite(x)
