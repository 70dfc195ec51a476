"""Products of round spheres and flat factors, evaluated at a base point.

The model represents a symmetric space through its data at one point: exact
curvature, ``nabla Rm = 0``, and tensor fields given by their value at the point
and extended by parallel transport.  Such an extension exists only for fields
invariant under the holonomy algebra, which ``covariant_derivative`` checks.
Coordinates are the orthonormal frame of the initial metric; under Ricci flow
each factor scales by ``s_i(t) = 1 - 2 (d_i - 1) t / r_i^2``.
"""
from functools import cached_property

import numpy as np

from .. import wedge as W
from ..errors import InvalidInput, InvalidMetric
from .base import FrameGeometry


class SymmetricGeometry(FrameGeometry):
    """``factors``: list of ``("sphere", d, r)`` or ``("flat", d)``; ``scales``: per-factor metric scale."""

    max_derivative_order = 8
    invariance_tol = 1e-9

    def __init__(self, factors, scales=None, frames=None):
        self.factors = [_normalize(f) for f in factors]
        self.n = sum(f[1] for f in self.factors)
        self.shape = ()
        s = np.ones(len(self.factors)) if scales is None else np.asarray(scales, dtype=float)
        if np.any(s <= 0):
            raise InvalidMetric("factor scale must stay positive")
        self.scales = s
        self.metric = np.diag(np.concatenate([[si] * f[1] for si, f in zip(s, self.factors)]))
        self.frames = np.diag(1 / np.sqrt(np.diag(self.metric))) if frames is None else np.asarray(frames, float)

    def with_scales(self, scales, frames=None):
        return type(self)(self.factors, scales, frames)

    def with_state(self, metric, frames):
        """Rebuild from a block-scalar metric in the model coordinates."""
        metric = np.asarray(metric, dtype=float)
        scales = np.array([metric[b[0], b[0]] for b in self.blocks])
        expected = np.diag(np.concatenate([[s] * len(b) for s, b in zip(scales, self.blocks)]))
        if np.max(np.abs(metric - expected)) > 1e-10 * max(1.0, np.max(np.abs(metric))):
            raise InvalidInput("metric is not a product of scaled factor metrics")
        return type(self)(self.factors, scales, frames)

    @property
    def blocks(self):
        out, start = [], 0
        for f in self.factors:
            out.append(range(start, start + f[1]))
            start += f[1]
        return out

    def sectional(self):
        """Current constant sectional curvature of each factor."""
        return np.array([
            1.0 / (f[2] ** 2 * s) if f[0] == "sphere" else 0.0
            for f, s in zip(self.factors, self.scales)
        ])

    def scale_rates(self):
        """``ds_i/dt`` under Ricci flow (constant in time)."""
        return np.array([
            -2.0 * (f[1] - 1) / f[2] ** 2 if f[0] == "sphere" else 0.0 for f in self.factors
        ])

    @cached_property
    def riemann(self):
        n = self.n
        R = np.zeros((n,) * 4)
        eye = np.eye(n)
        for blk, K, f in zip(self.blocks, self.sectional(), self.factors):
            if f[0] != "sphere" or f[1] < 2:
                continue
            idx = np.array(list(blk))
            d = eye[np.ix_(idx, idx)]
            sub = K * (np.einsum("ad,bc->abcd", d, d) - np.einsum("ac,bd->abcd", d, d))
            R[np.ix_(idx, idx, idx, idx)] = sub
        return R

    @cached_property
    def holonomy_generators(self):
        """Two-forms spanning the holonomy algebra (the sphere factors' rotations)."""
        out = []
        for blk, f in zip(self.blocks, self.factors):
            if f[0] == "sphere" and f[1] >= 2:
                b = list(blk)
                for i in range(len(b)):
                    for j in range(i + 1, len(b)):
                        out.append(W.e_wedge(b[i], b[j], self.n))
        return np.array(out).reshape(-1, self.n, self.n)

    def invariance_residual(self, U):
        """``max |h . U|`` over holonomy generators ``h`` acting as derivations."""
        U = np.asarray(U, dtype=float)
        k = U.ndim
        if len(self.holonomy_generators) == 0 or k == 0:
            return 0.0
        lam = W.lambda_action(U, k)  # lam[p, d] = Lambda^p_d U
        act = np.einsum("hpd,pd...->h...", self.holonomy_generators, lam)
        return float(np.max(np.abs(act)))

    @property
    def connection(self):
        return np.zeros((self.n,) * 3)

    def _directional(self, U):
        return np.zeros((self.n,) + np.shape(U))

    def covariant_derivative(self, U):
        scale = max(1.0, float(np.max(np.abs(U)))) if np.size(U) else 1.0
        if self.invariance_residual(U) > self.invariance_tol * scale:
            raise InvalidInput(
                "field is not holonomy invariant, so it has no parallel extension in this model"
            )
        return np.zeros((self.n,) + np.shape(U))


def _normalize(f):
    kind = f[0]
    if kind == "sphere":
        _, d, r = f
        if d < 2 or r <= 0:
            raise InvalidInput("sphere factors need dimension >= 2 and positive radius")
        return ("sphere", int(d), float(r))
    if kind == "flat":
        return ("flat", int(f[1]), 1.0)
    raise InvalidInput(f"unknown factor kind {kind!r}")


def round_sphere(n=3, radius=1.0):
    return SymmetricGeometry([("sphere", n, radius)])


def product(*factors):
    return SymmetricGeometry(list(factors))


def s2xs2(r1=1.0, r2=1.0):
    return SymmetricGeometry([("sphere", 2, r1), ("sphere", 2, r2)])


# ---------------------------------------------------------------------------
# Charts, for parallel transport along explicit paths


def polar_christoffels_s2(theta, radius=1.0):
    """``Gamma[k, i, j]`` of ``r^2 (d theta^2 + sin^2 theta d phi^2)`` in ``(theta, phi)``."""
    G = np.zeros((2, 2, 2))
    G[0, 1, 1] = -np.sin(theta) * np.cos(theta)
    G[1, 0, 1] = G[1, 1, 0] = np.cos(theta) / np.sin(theta)
    return G


def stereographic_metric(x, radius=1.0):
    x = np.asarray(x, dtype=float)
    return (2 * radius / (1 + x @ x)) ** 2 * np.eye(len(x))


def stereographic_christoffels(x, radius=1.0):
    """Christoffels of ``4 r^2 / (1 + |x|^2)^2 delta`` (conformally flat)."""
    x = np.asarray(x, dtype=float)
    d = len(x)
    dphi = -2 * x / (1 + x @ x)
    eye = np.eye(d)
    return (
        np.einsum("ki,j->kij", eye, dphi)
        + np.einsum("kj,i->kij", eye, dphi)
        - np.einsum("ij,k->kij", eye, dphi)
    )


def to_stereographic(p):
    """Unit-sphere point ``p`` in ``R^{d+1}`` to chart coordinates (projection from the south pole)."""
    p = np.asarray(p, dtype=float)
    return p[:-1] / (1 + p[-1])


def d_to_stereographic(p, dp):
    p = np.asarray(p, dtype=float)
    dp = np.asarray(dp, dtype=float)
    return dp[:-1] / (1 + p[-1]) - p[:-1] * dp[-1] / (1 + p[-1]) ** 2


def product_chart(model):
    """Christoffel function and metric function on the product of stereographic/flat charts."""
    blocks = model.blocks

    def christoffel(x):
        n = model.n
        G = np.zeros((n, n, n))
        for blk, f, s in zip(blocks, model.factors, model.scales):
            if f[0] == "sphere":
                idx = np.array(list(blk))
                G[np.ix_(idx, idx, idx)] = stereographic_christoffels(x[idx], f[2] * np.sqrt(s))
        return G

    def metric(x):
        n = model.n
        g = np.zeros((n, n))
        for blk, f, s in zip(blocks, model.factors, model.scales):
            idx = np.array(list(blk))
            if f[0] == "sphere":
                g[np.ix_(idx, idx)] = stereographic_metric(x[idx], f[2] * np.sqrt(s))
            else:
                g[np.ix_(idx, idx)] = s * np.eye(len(idx))
        return g

    return christoffel, metric
