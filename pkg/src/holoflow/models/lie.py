"""Left-invariant metrics on three-dimensional unimodular Lie groups.

Tensors are left-invariant, so they are constant in a left-invariant frame and
``e_m(U) = 0``.  Coordinates are the components in a fixed basis ``X_i`` of the
Lie algebra with ``[X_i, X_j] = c_ij^k X_k``.
"""
from functools import cached_property

import numpy as np

from ..errors import InvalidInput, InvalidMetric
from .base import FrameGeometry, gram_schmidt_frames


def su2_structure_constants():
    """``[X_2, X_3] = 2 X_1`` and cyclic permutations."""
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[i, j, k] = 2.0
        c[j, i, k] = -2.0
    return c


class LieGeometry(FrameGeometry):
    """Left-invariant metric ``g_ij = <X_i, X_j>`` with frame ``e_a = E^i_a X_i``."""

    max_derivative_order = 8

    def __init__(self, structure_constants, metric, frames=None):
        c = np.asarray(structure_constants, dtype=float)
        metric = np.asarray(metric, dtype=float)
        n = metric.shape[-1]
        if c.shape != (n, n, n) or metric.shape != (n, n):
            raise InvalidInput("structure constants and metric dimensions disagree")
        if not np.allclose(metric, metric.T, atol=1e-14) or np.min(np.linalg.eigvalsh(metric)) <= 0:
            raise InvalidMetric("metric must be symmetric positive definite")
        self.c = c
        self.n = n
        self.shape = ()
        self.metric = metric
        self.frames = gram_schmidt_frames(metric) if frames is None else np.asarray(frames, float)

    def with_state(self, metric, frames):
        return type(self)(self.c, metric, frames)

    @cached_property
    def frame_structure_constants(self):
        """``[e_a, e_b] = C_ab^c e_c``."""
        E, th = self.frames, self.coframes
        return np.einsum("ia,jb,ijk,ck->abc", E, E, self.c, th)

    @cached_property
    def connection(self):
        """Koszul formula in an orthonormal frame."""
        C = self.frame_structure_constants
        return 0.5 * (C - np.einsum("bca->abc", C) + np.einsum("cab->abc", C))

    @cached_property
    def riemann(self):
        G = self.connection  # G[a, b, d] = <nabla_a e_b, e_d>
        C = self.frame_structure_constants
        # R(e_a, e_b) e_c = (G_bcd G_adf - G_acd G_bdf - C_abd G_dcf) e_f
        return (
            np.einsum("bcd,adf->abcf", G, G)
            - np.einsum("acd,bdf->abcf", G, G)
            - np.einsum("abd,dcf->abcf", C, G)
        )

    def _directional(self, U):
        U = np.asarray(U, dtype=float)
        return np.zeros((self.n,) + U.shape)


def berger_sphere(a=1.0, b=1.0, c=1.0):
    """``SU(2)`` with ``<X_i, X_i> = (a, b, c)``; the Milnor frame is used."""
    A = np.array([a, b, c], dtype=float)
    if np.any(A <= 0):
        raise InvalidMetric("Berger parameters must be positive")
    return LieGeometry(su2_structure_constants(), np.diag(A), np.diag(1 / np.sqrt(A)))


def round_s3(radius=1.0):
    return berger_sphere(radius ** 2, radius ** 2, radius ** 2)


def milnor_ricci(A):
    """Principal Ricci curvatures ``r_i = 2 mu_j mu_k`` of a diagonal ``SU(2)`` metric."""
    A = np.asarray(A, dtype=float)
    lam = np.array([
        2 * np.sqrt(A[0] / (A[1] * A[2])),
        2 * np.sqrt(A[1] / (A[2] * A[0])),
        2 * np.sqrt(A[2] / (A[0] * A[1])),
    ])
    mu = 0.5 * lam.sum() - lam
    return 2 * np.array([mu[1] * mu[2], mu[2] * mu[0], mu[0] * mu[1]])
