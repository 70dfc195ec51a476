"""Pointwise ratios bounding the PDE part by the ODE part and vice versa.

For the pair ``X = Rhat + That`` (heat-type) and ``Y = A + B`` (ODE-type)
along a flow, record

    C_heat = max |(D_t - Delta) X|^2 / (|X|^2 + |Y|^2)
    C_ode  = max |D_t Y|^2 / (|X|^2 + |nabla X|^2 + |Y|^2)

over points and times in ``[delta, T]``.  Left-hand sides come from the
evolution-equation right-hand sides, whose agreement with differenced
fields the residual checks establish.  A ``0/0`` point counts as 0.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput
from ..flow import tensor_norm2
from .residuals import ResidualReport, rhs_of

ZERO = 1e-24


def pointwise_terms(S):
    """Squared norms entering both inequalities, per point."""
    lhs_x = tensor_norm2(rhs_of("Rhat", S), 4) + tensor_norm2(rhs_of("That", S), 5)
    lhs_y = tensor_norm2(rhs_of("A", S), 5) + tensor_norm2(rhs_of("B", S), 6)
    X2, Y2 = S.X2(), S.Y2()
    return {"lhsX": lhs_x, "lhsY": lhs_y, "X2": X2, "Y2": Y2, "gradX2": S.gradX2()}


def ratio_max(num, den, zero=ZERO):
    num = np.asarray(num, float)
    den = np.asarray(den, float)
    both0 = (num <= zero) & (den <= zero)
    bad = (num > zero) & (den <= zero)
    if np.any(bad):
        return np.inf
    r = np.where(both0, 0.0, num / np.where(den > zero, den, 1.0))
    return float(np.max(r, initial=0.0))


@dataclass
class InequalitySample:
    t: float
    C_heat: float
    C_ode: float
    X: float
    Y: float


def inequality_series(states, delta_frac=0.01):
    """Per-time ratio maxima for SystemStates with ``t`` in ``[delta, T]``."""
    states = list(states)
    if not states:
        raise InvalidInput("empty series")
    t0, T = states[0].t, states[-1].t
    delta = t0 + delta_frac * (T - t0)
    out = []
    for S in states:
        if S.t < delta - 1e-14:
            continue
        p = pointwise_terms(S)
        out.append(InequalitySample(
            t=float(S.t),
            C_heat=ratio_max(p["lhsX"], p["X2"] + p["Y2"]),
            C_ode=ratio_max(p["lhsY"], p["X2"] + p["gradX2"] + p["Y2"]),
            X=float(np.sqrt(np.max(p["X2"]))),
            Y=float(np.sqrt(np.max(p["Y2"]))),
        ))
    return out


def check_inequalities(states, delta_frac=0.01):
    """Two reports (``heat`` and ``ode``) with the measured constant; pass when it is finite."""
    samples = inequality_series(states, delta_frac)
    if not samples:
        raise InvalidInput("no states in [delta, T]")
    reports = []
    for name, attr in (("heat", "C_heat"), ("ode", "C_ode")):
        C = max(getattr(s, attr) for s in samples)
        reports.append(ResidualReport(
            equation=name,
            kind="inequality",
            residual=0.0,
            norms={"X_T": samples[-1].X, "Y_T": samples[-1].Y},
            C=C,
            tolerance=np.inf,
            passed=bool(np.isfinite(C)),
            levels=[getattr(s, attr) for s in samples],
        ))
    return reports
