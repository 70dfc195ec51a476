"""Frame-component tensor calculus shared by all model geometries.

Every geometry carries a metric ``g`` in its own coordinates and a frame
``E`` whose columns are ``g``-orthonormal vectors (``E^T g E = I``).  Tensor
fields are stored by their frame components with the point axes leading.
``omega[..., m, i, q] = <nabla_{e_m} e_i, e_q>`` is the connection in the frame,
so that

    (nabla U)_{m i1..ik} = e_m(U_{i1..ik}) - sum_s omega_{m i_s q} U_{..q..}.
"""
from functools import cached_property

import numpy as np

from .. import wedge as W
from ..errors import InvalidMetric


def gram_schmidt_frames(g):
    """Identity-aligned Gram-Schmidt frames, ``E = L^{-T}`` for ``g = L L^T``."""
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise InvalidMetric("metric is not positive definite") from exc
    n = g.shape[-1]
    eye = np.broadcast_to(np.eye(n), g.shape)
    return np.swapaxes(np.linalg.solve(L, eye), -1, -2)


def lowdin(E, g):
    """Nearest ``g``-orthonormal frame: ``E (E^T g E)^{-1/2}``."""
    G = np.swapaxes(E, -1, -2) @ g @ E
    w, v = np.linalg.eigh(G)
    inv_sqrt = (v / np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -1, -2)
    return E @ inv_sqrt


class FrameGeometry:
    """Base class; subclasses define ``connection``, ``riemann`` and ``_directional``."""

    n: int
    shape: tuple
    metric: np.ndarray
    frames: np.ndarray
    max_derivative_order = 4

    # -- frames ---------------------------------------------------------
    @cached_property
    def coframes(self):
        return np.linalg.inv(self.frames)

    def frame_residual(self):
        """``max |E^T g E - I|``."""
        G = np.swapaxes(self.frames, -1, -2) @ self.metric @ self.frames
        return float(np.max(np.abs(G - np.eye(self.n))))

    def min_eigenvalue(self):
        return float(np.min(np.linalg.eigvalsh(self.metric)))

    def to_frame(self, U, k):
        """Frame components of a covariant ``k``-tensor given in coordinates."""
        return _transform(U, self.frames, len(self.shape), k)

    def to_coords(self, U, k):
        """Coordinate components of a covariant ``k``-tensor given in the frame."""
        return _transform(U, self.coframes, len(self.shape), k)

    # -- derivatives ----------------------------------------------------
    def _directional(self, U):
        """``e_m(U)``: array with a new axis ``m`` after the point axes."""
        raise NotImplementedError

    @property
    def connection(self):
        raise NotImplementedError

    def covariant_derivative(self, U):
        """``nabla U`` for a frame-component field ``U`` (point axes leading)."""
        U = np.asarray(U, dtype=float)
        nb = len(self.shape)
        k = U.ndim - nb
        out = self._directional(U)
        om = self.connection
        n = self.n
        for s in range(k):
            moved = np.moveaxis(U, nb + s, -1)  # (..., rest, q)
            rest = moved.shape[nb:-1]
            flat = moved.reshape(moved.shape[:nb] + (-1, n))
            corr = np.einsum("...miq,...rq->...mri", om, flat)
            corr = corr.reshape(corr.shape[:nb] + (n,) + rest + (n,))
            out = out - np.moveaxis(corr, -1, nb + 1 + s)
        return out

    def laplacian(self, U):
        """``nabla_p nabla_p U``."""
        nb = len(self.shape)
        DD = self.covariant_derivative(self.covariant_derivative(U))
        return np.trace(DD, axis1=nb, axis2=nb + 1)

    # -- curvature ------------------------------------------------------
    @property
    def riemann(self):
        raise NotImplementedError

    @cached_property
    def ricci(self):
        # symmetrized: discretized curvature is pair-symmetric only to O(h^2)
        rc = W.ricci(self.riemann)
        return 0.5 * (rc + np.swapaxes(rc, -1, -2))

    @cached_property
    def scalar(self):
        return np.trace(self.ricci, axis1=-2, axis2=-1)

    @cached_property
    def ricci_coords(self):
        return self.to_coords(self.ricci, 2)

    @cached_property
    def ricci_sharp(self):
        """``Rc^i_j = g^{ik} Rc_kj`` in coordinates."""
        return np.linalg.solve(self.metric, self.ricci_coords)

    @cached_property
    def nabla_riemann(self):
        return self.covariant_derivative(self.riemann)

    @cached_property
    def nabla2_riemann(self):
        return self.covariant_derivative(self.nabla_riemann)

    def curvature_derivatives(self, kmax):
        out = [self.riemann]
        D = self.riemann
        for l in range(1, kmax + 1):
            if l == 1:
                D = self.nabla_riemann
            elif l == 2:
                D = self.nabla2_riemann
            else:
                D = self.covariant_derivative(D)
            out.append(D)
        return out

    def points(self):
        """Iterator over point indices (the empty tuple for point models)."""
        return np.ndindex(*self.shape) if self.shape else iter([()])



def _transform(U, M, nb, k):
    """``U_{..i..} M_{ia}`` in each of the ``k`` slots; ``M`` has the point axes leading."""
    out = np.asarray(U, dtype=float)
    n = M.shape[-1]
    for s in range(k):
        moved = np.moveaxis(out, nb + s, -1)
        rest = moved.shape[nb:-1]
        flat = moved.reshape(moved.shape[:nb] + (-1, n))
        res = np.einsum("...ri,...ia->...ra", flat, M).reshape(moved.shape[:nb] + rest + (n,))
        out = np.moveaxis(res, -1, nb + s)
    return out


def slot_sum(U, M, nb, k):
    """``sum_s U_{..p..} M_{p a}`` with ``M`` contracted into one slot at a time."""
    U = np.asarray(U, dtype=float)
    n = M.shape[-1]
    out = np.zeros_like(U)
    for s in range(k):
        moved = np.moveaxis(U, nb + s, -1)
        rest = moved.shape[nb:-1]
        flat = moved.reshape(moved.shape[:nb] + (-1, n))
        res = np.einsum("...rp,...pa->...ra", flat, M).reshape(moved.shape[:nb] + rest + (n,))
        out = out + np.moveaxis(res, -1, nb + s)
    return out
