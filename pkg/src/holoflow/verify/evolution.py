"""Right-hand sides of the evolution equations for R, T, A, B, Rhat and That.

Every function takes plain frame-component arrays (point axes leading) so the
expressions can be evaluated on random algebraic data as well as on a flow.
``rhs_*_raw`` variants are the forms before the subalgebra property of
``Pbar`` is used; both must agree whenever ``Pbar`` projects onto a subalgebra.
"""
import numpy as np

from .. import wedge as W
from .system import hat, hat_T


def _ricci(R):
    return W.ricci(R)


def nabla_ricci(T):
    """``(nabla_n Rc)_ms = T_nmbbs``."""
    return np.einsum("...nmbbs->...nms", T)


# ---------------------------------------------------------------------------
# curvature


def rhs_R(R):
    """``(D_t - Delta) R = -Q(Rm)``."""
    return -W.reaction_Q(R)


def rhs_T(R, T):
    """``(D_t - Delta) T = 2 Rc_mb T_b + 2 R_mbdp Lambda^p_d T_b - S(Rm, nabla Rm)``."""
    lam = W.lambda_action(T, 5)
    S = W.reaction_S(W.curvature_endo(R), W.curvature_endo(T))
    return (
        2 * np.einsum("...mb,...bijkl->...mijkl", _ricci(R), T)
        + 2 * np.einsum("...mbdp,...pdbijkl->...mijkl", R, lam)
        - S
    )


# ---------------------------------------------------------------------------
# A = nabla Phat and B = nabla nabla Phat (D_t Phat = 0)


def rhs_A(R, Phat, A, That):
    Rc = _ricci(R)
    return (
        np.einsum("...mr,...rijkl->...mijkl", Rc, A)
        - np.einsum("...pjkl,...rpirm->...mijkl", Phat, That)
        - np.einsum("...ipkl,...rpjrm->...mijkl", Phat, That)
        - np.einsum("...ijpl,...rpkrm->...mijkl", Phat, That)
        - np.einsum("...ijkp,...rplrm->...mijkl", Phat, That)
    )


def rhs_A_raw(R, T, Phat, A):
    """``Rc_mr A_r + T_rrmpq Lambda^q_p Phat``."""
    lam = W.lambda_action(Phat, 4)
    return np.einsum("...mr,...rijkl->...mijkl", _ricci(R), A) + np.einsum(
        "...rrmpq,...qpijkl->...mijkl", T, lam
    )


def rhs_B(R, T, Phat, A, B, DThat):
    """``D_t B`` regrouped around ``A``, ``B`` and ``nabla That``; ``DThat[m, ...] = nabla_m That``.

    ``R_mr B_rn + R_nr B_mr + (nabla_m Rc_ns + nabla_n Rc_ms - nabla_s Rc_mn) A_s
    + T_rrms(.) A_n + T_rrns(.) A_m - Phat * nabla_m That - T_rrnvw Phat * A_mvw``,
    where ``(.)`` runs over the slots ``i, j, k, l``.
    """
    Rc = _ricci(R)
    DRc = nabla_ricci(T)
    Tn = np.einsum("...rrnvw->...nvw", T)
    out = (
        np.einsum("...mr,...rnijkl->...mnijkl", Rc, B)
        + np.einsum("...nr,...mrijkl->...mnijkl", Rc, B)
        + np.einsum("...mns,...sijkl->...mnijkl", DRc, A)
        + np.einsum("...nms,...sijkl->...mnijkl", DRc, A)
        - np.einsum("...smn,...sijkl->...mnijkl", DRc, A)
    )
    for lead, o in (("m", "n"), ("n", "m")):
        out = out + (
            np.einsum(f"...rr{lead}si,...{o}sjkl->...mnijkl", T, A)
            + np.einsum(f"...rr{lead}sj,...{o}iskl->...mnijkl", T, A)
            + np.einsum(f"...rr{lead}sk,...{o}ijsl->...mnijkl", T, A)
            + np.einsum(f"...rr{lead}sl,...{o}ijks->...mnijkl", T, A)
        )
    out = out - (
        np.einsum("...sjkl,...mrsirn->...mnijkl", Phat, DThat)
        + np.einsum("...iskl,...mrsjrn->...mnijkl", Phat, DThat)
        + np.einsum("...ijsl,...mrskrn->...mnijkl", Phat, DThat)
        + np.einsum("...ijks,...mrslrn->...mnijkl", Phat, DThat)
    )
    out = out - (
        np.einsum("...nvw,...sjkl,...mvwsi->...mnijkl", Tn, Phat, A)
        + np.einsum("...nvw,...iskl,...mvwsj->...mnijkl", Tn, Phat, A)
        + np.einsum("...nvw,...ijsl,...mvwsk->...mnijkl", Tn, Phat, A)
        + np.einsum("...nvw,...ijks,...mvwsl->...mnijkl", Tn, Phat, A)
    )
    return out


def rhs_B_raw(R, T, DT, Phat, A, B):
    """Double commutator ``[D_t, nabla_m nabla_n] Phat`` before simplification.

    ``R_mr B_rn + T_rrmsu Lambda^u_s A_n + (nabla_m Rc_nr) A_r + R_nr B_mr
    + (nabla_m T)_rrnsu Lambda^u_s Phat + T_rrnsu nabla_m Lambda^u_s Phat``,
    where the first ``Lambda`` acts on every slot of ``A_n`` and
    ``nabla_m Lambda^u_s Phat`` is ``Lambda^u_s`` on the ``ijkl`` slots of ``A_m``.
    """
    Rc = _ricci(R)
    DRc = nabla_ricci(T)
    lamA_all = W.lambda_action(A, 5)  # (u, s, n, i, j, k, l)
    lamA_ijkl = W.lambda_action(A, 4)  # (m, u, s, i, j, k, l)
    lamP = W.lambda_action(Phat, 4)
    return (
        np.einsum("...mr,...rnijkl->...mnijkl", Rc, B)
        + np.einsum("...rrmsu,...usnijkl->...mnijkl", T, lamA_all)
        + np.einsum("...mnr,...rijkl->...mnijkl", DRc, A)
        + np.einsum("...nr,...mrijkl->...mnijkl", Rc, B)
        + np.einsum("...mrrnsu,...usijkl->...mnijkl", DT, lamP)
        + np.einsum("...rrnsu,...musijkl->...mnijkl", T, lamA_ijkl)
    )


# ---------------------------------------------------------------------------
# Rhat and That


def q_circ_phat(R, Phat):
    """``Q(Rm) o Phat`` by composing matrices."""
    return W.compose(W.reaction_Q(R), Phat)


def _pg(Phat, X, Y):
    """``Phat_ijce (X_cpkq Y_eplq - X_cplq Y_epkq)``."""
    return np.einsum("...ijce,...cpkq,...eplq->...ijkl", Phat, X, Y) - np.einsum(
        "...ijce,...cplq,...epkq->...ijkl", Phat, X, Y
    )


def _pg_m(Phat, X, Y):
    """``Phat_ijce (X_mcpkq Y_eplq - X_mcplq Y_epkq)``."""
    return np.einsum("...ijce,...mcpkq,...eplq->...mijkl", Phat, X, Y) - np.einsum(
        "...ijce,...mcplq,...epkq->...mijkl", Phat, X, Y
    )


def q_circ_phat_frame(R, Phat, Rhat, Rbar):
    """``Q(Rm) o Phat`` in components; every term carries a factor ``Rhat``."""
    return (
        np.einsum("...cdlk,...ijcd->...ijkl", R, Rhat)
        + 2 * _pg(Phat, Rbar, Rhat)
        - 2 * _pg(Phat, R, Rhat)
    )


def s_circ_phat(R, T, Phat):
    """``S(Rm, nabla Rm) o (Id x Phat)`` by composing matrices per direction."""
    S = W.reaction_S(W.curvature_endo(R), W.curvature_endo(T))
    return np.einsum("...ijab,...mabkl->...mijkl", Phat, S)


def s_circ_phat_frame(R, T, Phat, Rhat, That, Rbar):
    """``S(Rm, nabla Rm) o (Id x Phat)`` in components; every term carries ``Rhat`` or ``That``."""
    return (
        np.einsum("...ablk,...mijab->...mijkl", R, That)
        + np.einsum("...mablk,...ijab->...mijkl", T, Rhat)
        + 4 * _pg_m(Phat, That, Rbar)
        - 4 * _pg_m(Phat, T, Rhat)
    )


def rhs_Rhat(R, T, Phat, A, B, qp=None):
    """``2 A_pijab T_pabkl + B_ppijab R_abkl + Q(Rm) o Phat``."""
    if qp is None:
        qp = q_circ_phat(R, Phat)
    return (
        2 * np.einsum("...pijab,...pabkl->...ijkl", A, T)
        + np.einsum("...ppijab,...abkl->...ijkl", B, R)
        + qp
    )


def rhs_That(R, T, DT, Phat, A, B):
    """``Phat_ijab (tevol RHS)_mablk + 2 A_pijab nabla_p T_mabkl + B_ppijab T_mabkl``."""
    return (
        hat_T(Phat, rhs_T(R, T))
        + 2 * np.einsum("...pijab,...pmabkl->...mijkl", A, DT)
        + np.einsum("...ppijab,...mabkl->...mijkl", B, T)
    )


def rhs_That_displayed(R, T, DT, Phat, A, B, Rhat, That, sp=None):
    """The same right-hand side regrouped around ``Rhat`` and ``That``; needs ``Pbar`` a subalgebra projection."""
    if sp is None:
        sp = s_circ_phat(R, T, Phat)
    g1 = (
        np.einsum("...mpqi,...pqjkl->...mijkl", R, That)
        + np.einsum("...mpqj,...piqkl->...mijkl", R, That)
        + np.einsum("...mpqk,...pijql->...mijkl", R, That)
        + np.einsum("...mpql,...pijkq->...mijkl", R, That)
    )
    g2 = (
        np.einsum("...qimp,...pqjkl->...mijkl", Rhat, That)
        + np.einsum("...qjmp,...piqkl->...mijkl", Rhat, That)
        + np.einsum("...pablk,...ijqb,...qamp->...mijkl", T, Phat, Rhat)
        + np.einsum("...pablk,...ijaq,...qbmp->...mijkl", T, Phat, Rhat)
    )
    return (
        2 * np.einsum("...pijab,...pmabkl->...mijkl", A, DT)
        + np.einsum("...ppijab,...mabkl->...mijkl", B, T)
        + sp
        + 2 * g1
        + 2 * g2
    )


# ---------------------------------------------------------------------------
# Schematic audit


def schematic_terms(R, T, DT, Pbar, Phat, A, B, Rhat, That, DThat):
    """Right-hand sides of the A, B, Rhat and That equations assembled from hatted fields only."""
    Rbar = hat(Pbar, R)
    qp = q_circ_phat_frame(R, Phat, Rhat, Rbar)
    sp = s_circ_phat_frame(R, T, Phat, Rhat, That, Rbar)
    return {
        "A": rhs_A(R, Phat, A, That),
        "B": rhs_B(R, T, Phat, A, B, DThat),
        "Rhat": rhs_Rhat(R, T, Phat, A, B, qp=qp),
        "That": rhs_That_displayed(R, T, DT, Phat, A, B, Rhat, That, sp=sp),
    }


def schematic_audit(pair, rng, trials=20, scale=1.0):
    """Max of each assembled right-hand side with ``A = B = Rhat = That = 0`` on random bounded data."""
    n = pair.n
    worst = {}
    for _ in range(trials):
        R = W.random_curvature(n, rng, scale)
        T = scale * W.random_second_bianchi_T(n, rng)
        DT = scale * rng.standard_normal((n,) * 6)
        z4, z5, z6 = np.zeros((n,) * 4), np.zeros((n,) * 5), np.zeros((n,) * 6)
        terms = schematic_terms(R, T, DT, pair.Pbar, pair.Phat, z5, z6, z4, z5, z6)
        for k, v in terms.items():
            worst[k] = max(worst.get(k, 0.0), float(np.max(np.abs(v))))
    return worst


__all__ = [
    "nabla_ricci",
    "q_circ_phat",
    "q_circ_phat_frame",
    "rhs_A",
    "rhs_A_raw",
    "rhs_B",
    "rhs_B_raw",
    "rhs_R",
    "rhs_Rhat",
    "rhs_T",
    "rhs_That",
    "rhs_That_displayed",
    "s_circ_phat",
    "s_circ_phat_frame",
    "schematic_audit",
    "schematic_terms",
]
