"""Pointwise linear and Lie algebra on two-forms.

Conventions
-----------
A two-form is an antisymmetric ``(..., n, n)`` array.  ``wedge(v, w)`` uses
``v ^ w = (v (x) w - w (x) v) / 2``.

The Lie algebra inner product is ``<w, e> = 1/2 sum_ij w_ij e_ij`` (the sum over
``i < j``).  The canonical basis ``phi^(ij) = E_ij - E_ji`` (``i < j``,
lexicographic) is orthonormal for it.  Structure constants, the sharp product
and the trilinear form all use this inner product; with it ``Id# = (n - 2) Id``
and ``Q(Rm)`` reproduces the curvature evolution under Ricci flow.

An endomorphism ``E`` of two-forms is stored as a 4-index array with
``E(w)_cd = E_abcd w_ab`` (the "endo" layout).  Its flat form is the ``m x m``
matrix acting on basis coefficients, so ``matrix(E1 o E2) = matrix(E1) @
matrix(E2)``.  The Riemann tensor ``R_abcd`` (with ``R_abba`` the sectional
curvature) acts as ``Rm(w)_cd = -R_abcd w_ab``, so ``endo(Rm) = -R``.

Every function accepts leading batch dimensions (grid points).
"""
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import InvalidInput, InvalidMetric, PreconditionViolated

ATOL = 1e-10


def dim_wedge2(n):
    return n * (n - 1) // 2


def dim_from_wedge2(m):
    n = int(round((1 + np.sqrt(1 + 8 * m)) / 2))
    if dim_wedge2(n) != m:
        raise InvalidInput(f"{m} is not n(n-1)/2 for any integer n")
    return n


@lru_cache(maxsize=None)
def pairs(n):
    return tuple(combinations(range(n), 2))


@lru_cache(maxsize=None)
def _basis(n):
    phi = np.zeros((dim_wedge2(n), n, n))
    for A, (i, j) in enumerate(pairs(n)):
        phi[A, i, j] = 1.0
        phi[A, j, i] = -1.0
    phi.setflags(write=False)
    return phi


def basis(n):
    """Orthonormal basis of two-forms, shape ``(m, n, n)``."""
    if n < 2:
        raise InvalidInput("dimension must be at least 2")
    return _basis(n)


def inner(w, e):
    return 0.5 * np.einsum("...ij,...ij->...", w, e)


def norm(w):
    return np.sqrt(inner(w, w))


def wedge(v, w):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return 0.5 * (v[..., :, None] * w[..., None, :] - w[..., :, None] * v[..., None, :])


def e_wedge(i, j, n):
    """The two-form ``e_i ^ e_j`` in dimension ``n``."""
    eye = np.eye(n)
    return wedge(eye[i], eye[j])


def to_vec(w):
    """Coefficients in the canonical orthonormal basis (the strict upper triangle)."""
    w = np.asarray(w, dtype=float)
    n = w.shape[-1]
    iu = np.triu_indices(n, 1)
    return w[..., iu[0], iu[1]]


def from_vec(x):
    x = np.asarray(x, dtype=float)
    n = dim_from_wedge2(x.shape[-1])
    return np.einsum("...A,Aij->...ij", x, basis(n))


def is_antisymmetric(w, atol=ATOL):
    return bool(np.allclose(w, -np.swapaxes(w, -1, -2), atol=atol))


def _check_spd(g):
    g = np.asarray(g, dtype=float)
    if not np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-12):
        raise InvalidMetric("metric is not symmetric")
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise InvalidMetric("metric is not positive definite")
    return g


def bracket(w, e, g=None):
    """``[w, e]_ij = g^kl (w_ik e_lj - w_jk e_li)``; the matrix commutator when ``g = Id``."""
    w = np.asarray(w, dtype=float)
    e = np.asarray(e, dtype=float)
    if w.shape[-2:] != e.shape[-2:] or w.shape[-1] != w.shape[-2]:
        raise InvalidInput(f"incompatible two-forms {w.shape} and {e.shape}")
    if g is None:
        prod = w @ e
    else:
        g = _check_spd(g)
        if g.shape[-1] != w.shape[-1]:
            raise InvalidInput("metric dimension does not match two-forms")
        prod = w @ np.linalg.solve(g, e)
    return prod - np.swapaxes(prod, -1, -2)


@lru_cache(maxsize=None)
def _structure_constants(n):
    phi = basis(n)
    br = np.einsum("Aij,Bjk->ABik", phi, phi)
    br = br - np.swapaxes(br, -1, -2)
    C = np.einsum("ABij,Cij->ABC", br, phi) * 0.5
    C.setflags(write=False)
    return C


def structure_constants(n):
    """``C[A, B, C] = <[phi^A, phi^B], phi^C>`` in the canonical basis."""
    return _structure_constants(n)


# ---------------------------------------------------------------------------
# Endomorphisms of two-forms


def _n_of_endo(E):
    E = np.asarray(E)
    if E.ndim < 4 or len(set(E.shape[-4:])) != 1:
        raise InvalidInput(f"expected (..., n, n, n, n) endomorphism, got {E.shape}")
    return E.shape[-1]


def identity_endo(n):
    d = np.eye(n)
    return 0.5 * (np.einsum("ac,bd->abcd", d, d) - np.einsum("ad,bc->abcd", d, d))


def to_matrix(E):
    n = _n_of_endo(E)
    phi = basis(n)
    return 0.5 * np.einsum("Aab,...abcd,Bcd->...BA", phi, E, phi, optimize=True)


def from_matrix(M):
    M = np.asarray(M, dtype=float)
    n = dim_from_wedge2(M.shape[-1])
    phi = basis(n)
    return 0.5 * np.einsum("Aab,...BA,Bcd->...abcd", phi, M, phi, optimize=True)


def apply(E, w):
    return np.einsum("...abcd,...ab->...cd", E, w)


def compose(E1, E2):
    """``E1 o E2`` (apply ``E2`` first)."""
    return np.einsum("...abef,...efcd->...abcd", E2, E1)


def adjoint(E):
    return np.einsum("...abcd->...cdab", E)


def curvature_endo(R):
    """Endomorphism ``Rm`` of a Riemann tensor ``R_abcd``."""
    return -np.asarray(R)


def antisymmetry_residual(E):
    E = np.asarray(E)
    return max(
        float(np.max(np.abs(E + np.swapaxes(E, -4, -3)), initial=0.0)),
        float(np.max(np.abs(E + np.swapaxes(E, -2, -1)), initial=0.0)),
    )


def curvature_symmetry_residual(R):
    """Max violation of pair symmetry, antisymmetries and the first Bianchi identity."""
    R = np.asarray(R)
    pair = np.abs(R - np.einsum("...abcd->...cdab", R))
    bianchi = np.abs(
        R + np.einsum("...abcd->...acdb", R) + np.einsum("...abcd->...adbc", R)
    )
    return max(antisymmetry_residual(R), float(np.max(pair, initial=0.0)),
               float(np.max(bianchi, initial=0.0)))


def random_curvature(n, rng, scale=1.0):
    """Random algebraic curvature tensor (pair symmetric, first Bianchi)."""
    m = dim_wedge2(n)
    S = rng.standard_normal((m, m))
    S = scale * (S + S.T) / 2
    R = -from_matrix(S)
    # project onto the kernel of the Bianchi map: R - (1/3) b(R)
    b = (R + np.einsum("abcd->acdb", R) + np.einsum("abcd->adbc", R)) / 3.0
    return R - b


def random_second_bianchi_T(n, rng):
    """Random 5-tensor ``T_mabcd`` with the algebraic symmetries of ``nabla R``.

    Each slice ``T_m`` is an algebraic curvature tensor; the second Bianchi
    identity in ``(m, a, b)`` is imposed by projection.
    """
    T = np.stack([random_curvature(n, rng) for _ in range(n)])
    for _ in range(60):
        cyc = (T + np.einsum("mabcd->abmcd", T) + np.einsum("mabcd->bmacd", T)) / 3.0
        T = T - cyc
        T = project_curvature(T)
    return T


def project_curvature(R):
    """Nearest algebraic curvature tensor: pair antisymmetry, pair symmetry, first Bianchi."""
    R = 0.5 * (R - np.einsum("...abcd->...bacd", R))
    R = 0.5 * (R - np.einsum("...abcd->...abdc", R))
    R = 0.5 * (R + np.einsum("...abcd->...cdab", R))
    b = (R + np.einsum("...abcd->...acdb", R) + np.einsum("...abcd->...adbc", R)) / 3.0
    return R - b


# ---------------------------------------------------------------------------
# Lie-algebraic constructions


def trilinear_T(A, B, C):
    """``T[A,B,C](v1,v2,v3) = <[A v1, B v2], C v3>`` on ``v = e_a ^ e_b``.

    Returns a 6-index array ``[a, b, c, d, e, f]`` for
    ``v1 = e_a ^ e_b``, ``v2 = e_c ^ e_d``, ``v3 = e_e ^ e_f``.
    """
    n = _n_of_endo(A)
    if _n_of_endo(B) != n or _n_of_endo(C) != n:
        raise InvalidInput("trilinear_T needs endomorphisms of equal dimension")
    # E(e_a ^ e_b) = E_ab..
    prod = np.einsum("...abpq,...cdqr->...abcdpr", A, B)
    comm = prod - np.einsum("...cdpq,...abqr->...abcdpr", B, A)
    return 0.5 * np.einsum("...abcdpr,...efpr->...abcdef", comm, C)


def trilinear_T_matrix(A, B, C):
    """Trilinear form on the canonical orthonormal basis, shape ``(m, m, m)``."""
    cst = structure_constants(_n_of_endo(A))
    a, b, c = to_matrix(A), to_matrix(B), to_matrix(C)
    return np.einsum("...pA,...qB,pqr,...rC->...ABC", a, b, cst, c, optimize=True)


def sharp(A, B):
    """Hamilton's product ``A # B`` via structure constants."""
    n = _n_of_endo(A)
    if _n_of_endo(B) != n:
        raise InvalidInput("sharp needs endomorphisms of equal dimension")
    return from_matrix(sharp_matrix(to_matrix(A), to_matrix(B)))


def sharp_matrix(a, b):
    """``A # B`` on flat matrices: ``(A#B)_IJ = 1/2 A_MP B_NQ C^PQ_I C^MN_J``."""
    n = dim_from_wedge2(a.shape[-1])
    cst = structure_constants(n)
    # paper layout A_MP = <A phi^M, phi^P> = a[P, M]
    out = 0.5 * np.einsum("...pm,...qn,pqi,mnj->...ij", a, b, cst, cst, optimize=True)
    return np.swapaxes(out, -1, -2)


def sharp_basis_sum(A, B):
    """``A # B (w) = 1/2 sum_MN <[A phi^M, B phi^N], w> [phi^M, phi^N]`` by explicit brackets.

    Independent of the structure-constant path; used as a cross-check.
    """
    n = _n_of_endo(A)
    phi = basis(n)
    Aphi = np.stack([apply(A, f) for f in phi], axis=-3)
    Bphi = np.stack([apply(B, f) for f in phi], axis=-3)
    c = to_vec(bracket(Aphi[..., :, None, :, :], Bphi[..., None, :, :, :]))  # (..., M, N, j)
    w = to_vec(bracket(phi[:, None], phi[None, :]))  # (M, N, i)
    return from_matrix(0.5 * np.einsum("...MNj,MNi->...ij", c, w))


def reaction_Q(R):
    """``Q(Rm) = Rm^2 + Rm#`` as an endomorphism, for a Riemann tensor ``R``."""
    rm = to_matrix(curvature_endo(R))
    return from_matrix(rm @ rm + sharp_matrix(rm, rm))


def reaction_S(A, F):
    """``S(A, F)(X) = A o F_X + F_X o A + 2 F_X # A`` for each direction ``X = e_m``.

    ``A`` has shape ``(..., n, n, n, n)`` and ``F`` shape ``(..., n, n, n, n, n)``
    with the direction index first.
    """
    n = _n_of_endo(A)
    F = np.asarray(F)
    if F.shape[-5:] != (n,) * 5:
        raise InvalidInput(f"F must carry a direction index: got {F.shape}")
    a = to_matrix(A)[..., None, :, :]
    f = to_matrix(F)
    return from_matrix(a @ f + f @ a + 2 * sharp_matrix(f, a))


def reaction_U(A, F):
    """``U(A,F)(X, w, e) = sum_i <[A(e_i^X), F(e_i, w)], e> + <[A(e_i^X), F(e_i, e)], w>``.

    Components ``U_mijkl`` are taken on ``X = e_m``, ``w = e_i ^ e_j``,
    ``e = e_k ^ e_l`` with the full-sum pairing that identifies endomorphisms
    with 4-tensors.
    """
    n = _n_of_endo(A)
    F = np.asarray(F)
    if F.shape[-5:] != (n,) * 5:
        raise InvalidInput(f"F must carry a direction index: got {F.shape}")
    # A(e_p ^ e_m) = A_pm.. ;  F(e_p, e_i ^ e_j) = F_pij..
    first = np.einsum("...pmuv,...pijvw->...mijuw", A, F)
    # full-sum pairing with e_k ^ e_l picks out the (k, l) entry
    comm = first - np.einsum("...pijuv,...pmvw->...mijuw", F, A)
    return comm + np.einsum("...mklij->...mijkl", comm)


def reaction_U_expanded(R, T):
    """``R_mb T_bijkl + R_mbdp Lambda^p_d T_bijkl`` expanded slot by slot."""
    return (
        np.einsum("...mbdi,...bdjkl->...mijkl", R, T)
        + np.einsum("...mbdj,...bidkl->...mijkl", R, T)
        + np.einsum("...mbdk,...bijdl->...mijkl", R, T)
        + np.einsum("...mbdl,...bijkd->...mijkl", R, T)
    )


def ricci(R):
    """``Rc_ad = R_abbd``."""
    return np.einsum("...abbd->...ad", R)


def reaction_U_lambda(R, T):
    """``R_mb T_bijkl + R_mbdp (Lambda^p_d T)_bijkl`` with the derivation applied to all slots."""
    lam = lambda_action(T, 5)
    return np.einsum("...mb,...bijkl->...mijkl", ricci(R), T) + np.einsum(
        "...mbdp,...pdbijkl->...mijkl", R, lam
    )


def sym_projector(V):
    """Projection of 4-tensors onto symmetric products of two-forms."""
    return 0.125 * (
        V
        - np.einsum("...ijkl->...jikl", V)
        - np.einsum("...ijkl->...ijlk", V)
        + np.einsum("...ijkl->...jilk", V)
        + np.einsum("...ijkl->...klij", V)
        - np.einsum("...ijkl->...lkij", V)
        - np.einsum("...ijkl->...klji", V)
        + np.einsum("...ijkl->...lkji", V)
    )


def hamilton_C(R, T):
    """``C_mijkl = -T_mipqj R_kpql``."""
    return -np.einsum("...mipqj,...kpql->...mijkl", T, R)


def reaction_U_hamilton(R, T):
    """``-8 P(C with e_m in its fourth slot)`` for ``C = hamilton_C(R, T)``."""
    V = np.einsum("...abcmd->...mabcd", hamilton_C(R, T))
    return -8.0 * sym_projector(V)


def lambda_action(U, k):
    """All ``Lambda^p_d`` applied to the trailing ``k`` slots of ``U``.

    ``Lambda^p_d U_{i1..ik} = sum_s delta(p, i_s) U_{i1..d..ik}``.  Returns an
    array of shape ``(..., n, n, n, ..., n)`` with ``p, d`` inserted before the
    ``k`` tensor slots.
    """
    U = np.asarray(U, dtype=float)
    n = U.shape[-1]
    nb = U.ndim - k
    eye = np.eye(n).reshape((n, 1) + (1,) * (k - 1) + (n,))
    out = np.zeros(U.shape[:nb] + (n, n) + (n,) * k)
    for s in range(k):
        # (..., d, other slots) times delta(p, i) gives (..., p, d, other slots, i)
        base = np.moveaxis(U, nb + s, nb)
        term = base[(Ellipsis, None) + (slice(None),) * k + (None,)] * eye
        out = out + np.moveaxis(term, -1, nb + 2 + s)
    return out


# ---------------------------------------------------------------------------
# Reaction-term identities on a split H + K


def _check_pair(Pbar, Phat, tol):
    n = _n_of_endo(Pbar)
    pb = to_matrix(Pbar)
    if not subalgebra_projection_residual(pb) <= tol:
        raise PreconditionViolated("image of Pbar is not closed under the bracket")
    if np.max(np.abs(pb + to_matrix(Phat) - np.eye(dim_wedge2(n)))) > tol:
        raise PreconditionViolated("Pbar + Phat != Id")


def subalgebra_projection_residual(pb):
    """``max |Phat [Pbar x, Pbar y]|`` over basis pairs, for a flat projection ``pb``."""
    m = pb.shape[-1]
    n = dim_from_wedge2(m)
    cst = structure_constants(n)
    ph = np.eye(m) - pb
    t = np.einsum("...pA,...qB,pqr,...Cr->...ABC", pb, pb, cst, ph)
    return float(np.max(np.abs(t), initial=0.0))


def qcomp_terms(R, Pbar, Phat):
    """Both sides of the ``Q(Rm) o Phat`` decomposition as flat matrices."""
    rm = to_matrix(curvature_endo(R))
    pb, ph = to_matrix(Pbar), to_matrix(Phat)
    rhat = rm @ ph
    rbar_s = pb @ rm
    rhat_s = ph @ rm
    lhs = (rm @ rm + sharp_matrix(rm, rm)) @ ph
    rhs = rm @ rhat + (sharp_matrix(rbar_s, rhat_s) + sharp_matrix(rm, rhat_s)) @ ph
    literal = rm @ rhat + sharp_matrix(rbar_s, rhat_s) + sharp_matrix(rm, rhat_s)
    return lhs, rhs, literal


def qcomp_identity(R, pair, tol=1e-8):
    """Residual of ``Q(R) o Phat = R o Rhat + (Rbar* # Rhat* + R # Rhat*) o Phat``."""
    Pbar, Phat = pair.Pbar, pair.Phat
    _check_pair(Pbar, Phat, tol)
    lhs, rhs, _ = qcomp_terms(R, Pbar, Phat)
    return float(np.linalg.norm(lhs - rhs))


def scomp_terms(R, T, Pbar, Phat):
    """Both sides of the ``S(R, T)_X o Phat`` decomposition, per direction."""
    rm = to_matrix(curvature_endo(R))[..., None, :, :]
    tx = to_matrix(curvature_endo(T))
    pb, ph = to_matrix(Pbar), to_matrix(Phat)
    if pb.ndim > 2:
        pb, ph = pb[..., None, :, :], ph[..., None, :, :]
    s = rm @ tx + tx @ rm + 2 * sharp_matrix(tx, rm)
    lhs = s @ ph
    rhat = rm @ ph
    that = tx @ ph
    rbar_s, rhat_s, that_s = pb @ rm, ph @ rm, ph @ tx
    rhs = rm @ that + tx @ rhat + 2 * (
        sharp_matrix(that_s, rbar_s) + sharp_matrix(tx, rhat_s)
    ) @ ph
    return lhs, rhs


def scomp_identity(R, T, pair, tol=1e-8):
    """Residual of ``S(R,T)_X o Phat = R o That_X + T_X o Rhat + 2(That*_X # Rbar* + T_X # Rhat*) o Phat``."""
    _check_pair(pair.Pbar, pair.Phat, tol)
    lhs, rhs = scomp_terms(R, T, pair.Pbar, pair.Phat)
    return float(np.linalg.norm(lhs - rhs))
