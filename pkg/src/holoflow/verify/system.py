"""Composite fields built from the curvature and a complementary projection.

All fields are frame components with the point axes leading:

    Rhat_ijkl = Phat_ijab R_ablk        (Rm o Phat)
    That_mijkl = Phat_ijab T_mablk      (nabla Rm o (Id x Phat))
    Rbar, Tbar                          the same with Pbar
    Rhat*_ijkl = Phat_abkl R_ijba       (Phat o Rm), likewise Rbar*
    A = nabla Phat,  B = nabla nabla Phat,  X = Rhat + That,  Y = A + B
"""
from dataclasses import dataclass

import numpy as np

from .. import wedge as W
from ..errors import InvalidInput, UnsupportedOrder
from ..flow import tensor_norm2


def hat(P, R):
    """``P_ijab R_ablk``: the endomorphism composite ``Rm o P``."""
    return np.einsum("...ijab,...ablk->...ijkl", P, R)


def hat_T(P, T):
    """``P_ijab T_mablk``."""
    return np.einsum("...ijab,...mablk->...mijkl", P, T)


def adj(P, R):
    """``P_abkl R_ijba``: the composite ``P o Rm``."""
    return np.einsum("...abkl,...ijba->...ijkl", P, R)


@dataclass
class SystemState:
    t: float
    geom: object
    R: np.ndarray
    T: np.ndarray
    Pbar: np.ndarray
    Phat: np.ndarray
    A: np.ndarray
    B: np.ndarray
    Rhat: np.ndarray
    That: np.ndarray
    Rbar: np.ndarray
    Tbar: np.ndarray
    Rhat_adj: np.ndarray
    Rbar_adj: np.ndarray

    @property
    def ricci(self):
        return W.ricci(self.R)

    def X2(self):
        return tensor_norm2(self.Rhat, 4) + tensor_norm2(self.That, 5)

    def Y2(self):
        out = tensor_norm2(self.A, 5)
        if self.B is not None:
            out = out + tensor_norm2(self.B, 6)
        return out

    def gradX2(self):
        g = self.geom
        return tensor_norm2(g.covariant_derivative(self.Rhat), 5) + tensor_norm2(
            g.covariant_derivative(self.That), 6
        )

    def norms(self):
        """Sup norms of each composite."""
        out = {}
        for name in ("R", "T", "A", "B", "Rhat", "That", "Rbar", "Tbar"):
            v = getattr(self, name)
            out[name] = None if v is None else float(np.max(np.abs(v), initial=0.0))
        out["X"] = float(np.sqrt(np.max(self.X2())))
        out["Y"] = float(np.sqrt(np.max(self.Y2())))
        return out


def build_system_state(state, need_B=True):
    """Assemble the composites for a flow state carrying a projection pair."""
    geom, pair = state.geom, state.proj
    if pair is None:
        raise InvalidInput("the state carries no projection pair")
    if need_B and geom.max_derivative_order < 3:
        raise UnsupportedOrder("B and nabla That need third derivatives of the curvature data")
    if not need_B and geom.max_derivative_order < 1:
        raise UnsupportedOrder("A needs first derivatives")
    R, T = geom.riemann, geom.nabla_riemann
    Pb, Ph = pair.Pbar, pair.Phat
    A = geom.covariant_derivative(Ph)
    B = geom.covariant_derivative(A) if need_B else None
    return SystemState(
        t=state.t,
        geom=geom,
        R=R,
        T=T,
        Pbar=Pb,
        Phat=Ph,
        A=A,
        B=B,
        Rhat=hat(Ph, R),
        That=hat_T(Ph, T),
        Rbar=hat(Pb, R),
        Tbar=hat_T(Pb, T),
        Rhat_adj=adj(Ph, R),
        Rbar_adj=adj(Pb, R),
    )
