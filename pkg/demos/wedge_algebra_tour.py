"""
Two-forms as a Lie algebra
==========================

Brackets, Hamilton's sharp product and the curvature reaction term on
small examples, then the two composition identities that keep a
subalgebra's complement invariant.
"""
import numpy as np

from holoflow import wedge as W
from holoflow.holonomy import projection_pair, span

# The canonical basis e_i ^ e_j of two-forms is orthonormal for <w, e> = 1/2 sum w_ij e_ij.
phi = W.basis(3)
print("basis size in dimension 3:", len(phi))

# With the identity metric the bracket is the matrix commutator.
w, e = W.e_wedge(0, 1, 3), W.e_wedge(1, 2, 3)
print("[e01, e12] =\n", W.bracket(w, e))

# Id # Id is a multiple of the identity: (n - 2) Id.
for n in (3, 4, 5):
    I = W.identity_endo(n)
    print(f"n={n}: Id # Id = {np.diag(W.to_matrix(W.sharp(I, I)))[0]:.1f} Id")

# A round sphere of curvature K has Rm = 2K Id and Q(Rm) = 4 (n - 1) K^2 Id.
n, K = 4, 0.25
d = np.eye(n)
R = K * (np.einsum("ad,bc->abcd", d, d) - np.einsum("ac,bd->abcd", d, d))
print("Rm diagonal:", np.diag(W.to_matrix(W.curvature_endo(R)))[:3])
print("Q  diagonal:", np.diag(W.to_matrix(W.reaction_Q(R)))[:3])

# u(2) inside so(4): the two-forms commuting with a complex structure.
J = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)
comm = np.einsum("Aij,jk->Aik", W.basis(4), J) - np.einsum("ij,Ajk->Aik", J, W.basis(4))
_, s, vt = np.linalg.svd(comm.reshape(6, -1).T)
u2 = span(np.einsum("kA,Aij->kij", vt[np.sum(s > 1e-10):], W.basis(4)), 4)
pair = projection_pair(u2)
print("u(2): dim", u2.dim, "ranks (Pbar, Phat) =", pair.ranks())

# For a subalgebra, Q(Rm) o Phat and S(Rm, nabla Rm) o (Id x Phat) are built
# from terms that each contain Rm o Phat; the residuals below are round-off.
rng = np.random.default_rng(0)
worst_q = worst_s = 0.0
for _ in range(50):
    R = W.random_curvature(4, rng)
    T = W.random_second_bianchi_T(4, rng)
    worst_q = max(worst_q, W.qcomp_identity(R, pair))
    worst_s = max(worst_s, W.scomp_identity(R, T, pair))
print(f"reaction identities over 50 random curvatures: {worst_q:.1e}, {worst_s:.1e}")

# The trilinear form T[Phat, Pbar, Pbar] vanishes because [H, H] lies in H.
print("T[Phat, Pbar, Pbar] max:", np.max(np.abs(W.trilinear_T(pair.Phat, pair.Pbar, pair.Pbar))))
