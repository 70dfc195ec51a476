"""Metrics sampled on periodic structured grids with centered O(h^2) differences."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .. import wedge as W
from ..errors import AccuracyError, InvalidInput, InvalidMetric
from .base import FrameGeometry, gram_schmidt_frames

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PeriodicGrid:
    """Periodic box ``prod [0, L_i)`` with ``N_i`` points per axis.

    An axis with a single point carries no dependence on that coordinate.
    """

    shape: tuple
    lengths: tuple

    def __post_init__(self):
        if len(self.shape) != len(self.lengths):
            raise InvalidInput("shape and lengths must have equal length")
        if any(N < 1 for N in self.shape):
            raise InvalidInput("every axis needs at least one point")
        if any(1 < N < 4 for N in self.shape):
            raise InvalidInput("resolved axes need at least 4 points per period")

    @property
    def n(self):
        return len(self.shape)

    @property
    def spacing(self):
        return tuple(L / N for L, N in zip(self.lengths, self.shape))

    @cached_property
    def coords(self):
        axes = [np.arange(N) * h for N, h in zip(self.shape, self.spacing)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def diff(self, f, axis):
        """Centered first difference along grid ``axis`` (grid axes lead ``f``)."""
        if self.shape[axis] == 1:
            return np.zeros_like(f)
        h = self.spacing[axis]
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)

    def gradient(self, f):
        """``d_j f`` stacked on a new axis after the grid axes."""
        nb = self.n
        return np.stack([self.diff(f, j) for j in range(nb)], axis=nb)

    def refine(self, factor=2):
        return PeriodicGrid(tuple(N * factor if N > 1 else 1 for N in self.shape), self.lengths)


class GridGeometry(FrameGeometry):
    """Coordinate metric on a periodic grid with a per-point orthonormal frame."""

    symmetry_tol = 1e-2

    def __init__(self, grid, metric, frames=None, check_accuracy=True):
        metric = np.asarray(metric, dtype=float)
        n = grid.n
        if metric.shape != tuple(grid.shape) + (n, n):
            raise InvalidInput(f"metric shape {metric.shape} does not match grid {grid.shape}")
        if not np.allclose(metric, np.swapaxes(metric, -1, -2), atol=1e-12):
            raise InvalidMetric("metric is not symmetric")
        if np.min(np.linalg.eigvalsh(metric)) <= 0:
            raise InvalidMetric("metric is not positive definite")
        self.grid = grid
        self.n = n
        self.shape = tuple(grid.shape)
        self.metric = metric
        self.frames = gram_schmidt_frames(metric) if frames is None else np.asarray(frames, float)
        self.check_accuracy = check_accuracy

    def with_state(self, metric, frames):
        return type(self)(self.grid, metric, frames, self.check_accuracy)

    @cached_property
    def inverse_metric(self):
        return np.linalg.inv(self.metric)

    @cached_property
    def christoffels(self):
        """``Gamma[..., k, i, j] = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)``."""
        dg = self.grid.gradient(self.metric)  # (..., l, i, j) = d_l g_ij
        first = np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg
        # first[..., l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
        return 0.5 * np.einsum("...kl,...lij->...kij", self.inverse_metric, first)

    @cached_property
    def riemann_coords(self):
        """``R_ijkl = g(R(d_i, d_j) d_k, d_l)``."""
        G = self.christoffels
        dG = self.grid.gradient(G)  # (..., i, m, j, k) = d_i Gamma^m_jk
        Rm = (
            np.einsum("...imjk->...ijkm", dG)
            - np.einsum("...jmik->...ijkm", dG)
            + np.einsum("...mip,...pjk->...ijkm", G, G)
            - np.einsum("...mjp,...pik->...ijkm", G, G)
        )
        return np.einsum("...ijkm,...ml->...ijkl", Rm, self.metric)

    @cached_property
    def raw_riemann(self):
        """Frame components of the differenced curvature, before symmetrization."""
        return self.to_frame(self.riemann_coords, 4)

    @cached_property
    def riemann(self):
        """Algebraic curvature tensor nearest to ``raw_riemann`` (an O(h^2) change)."""
        R = self.raw_riemann
        if self.check_accuracy:
            scale = max(1.0, float(np.max(np.abs(R))))
            resid = W.curvature_symmetry_residual(R)
            if resid > 10 * self.symmetry_tol * scale:
                raise AccuracyError(
                    f"curvature symmetry residual {resid:.3g} too large; refine the grid"
                )
        return W.project_curvature(R)

    @cached_property
    def connection(self):
        E = self.frames
        dE = self.grid.gradient(E)  # (..., j, k, i) = d_j E^k_i
        D = dE + np.einsum("...kjl,...li->...jki", self.christoffels, E)
        om = np.einsum("...jm,...jki,...kr,...rq->...miq", E, D, self.metric, E)
        return 0.5 * (om - np.swapaxes(om, -1, -2))

    def _directional(self, U):
        return _frame_dir(self.frames, self.grid.gradient(U), self.grid.n)


def _frame_dir(E, dU, nb):
    n = E.shape[-1]
    flat = dU.reshape(dU.shape[: nb + 1] + (-1,))
    out = np.einsum("...jm,...jr->...mr", E, flat)
    return out.reshape(dU.shape[:nb] + (n,) + dU.shape[nb + 1:])


# ---------------------------------------------------------------------------
# Model families


def flat_torus(n=3, resolution=8, length=TWO_PI):
    shape = _resolution(resolution, n)
    grid = PeriodicGrid(shape, (length,) * n)
    g = np.broadcast_to(np.eye(n), shape + (n, n)).copy()
    return GridGeometry(grid, g)


def warped_t3(f=None, h=None, resolution=64, length=TWO_PI):
    """``dx^2 + f(x)^2 dy^2 + h(x)^2 dz^2`` on a grid depending on ``x`` only.

    ``f`` and ``h`` are callables or arrays of samples at the ``x`` nodes;
    ``f = None`` gives the split case ``f == 1``.
    """
    N = int(resolution)
    grid = PeriodicGrid((N, 1, 1), (length,) * 3)
    x = grid.coords[0][:, 0, 0]
    fv = _samples(f, x, 1.0)
    hv = _samples(h, x, 1.0)
    if np.min(fv) <= 0 or np.min(hv) <= 0:
        raise InvalidMetric("warping functions must be positive")
    g = np.zeros((N, 1, 1, 3, 3))
    g[..., 0, 0] = 1.0
    g[:, 0, 0, 1, 1] = fv ** 2
    g[:, 0, 0, 2, 2] = hv ** 2
    return GridGeometry(grid, g)


def conformal_t2(u=None, resolution=64, length=TWO_PI):
    """``exp(2u) (dx^2 + dy^2)`` with ``u`` a callable of ``(x, y)`` or samples."""
    shape = _resolution(resolution, 2)
    grid = PeriodicGrid(shape, (length,) * 2)
    X, Y = grid.coords
    if u is None:
        uv = np.zeros(shape)
    elif callable(u):
        uv = np.asarray(u(X, Y), float)
    else:
        uv = np.asarray(u, float)
    g = np.exp(2 * uv)[..., None, None] * np.eye(2)
    return GridGeometry(grid, g)


def from_metric_function(metric_fn, resolution, lengths):
    """Grid model from a callable returning ``g_ij`` at coordinate arrays."""
    n = len(lengths)
    shape = _resolution(resolution, n)
    grid = PeriodicGrid(shape, tuple(lengths))
    g = np.asarray(metric_fn(*grid.coords), float)
    if g.shape == (n, n) + shape:
        g = np.moveaxis(g, (0, 1), (-2, -1))
    return GridGeometry(grid, g)


def _resolution(resolution, n):
    if np.isscalar(resolution):
        return (int(resolution),) * n
    shape = tuple(int(r) for r in resolution)
    if len(shape) != n:
        raise InvalidInput(f"resolution {shape} does not have {n} entries")
    return shape


def _samples(fn, x, default):
    if fn is None:
        return np.full_like(x, default)
    if callable(fn):
        return np.asarray(fn(x), float) * np.ones_like(x)
    arr = np.asarray(fn, float)
    if arr.shape != x.shape:
        raise InvalidInput(f"expected {x.shape[0]} samples, got {arr.shape}")
    return arr
