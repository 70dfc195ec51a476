"""Candidate holonomy subalgebras of two-forms and their projection pairs."""
from dataclasses import dataclass, field

import numpy as np

from . import wedge as W
from .errors import InvalidInput, Unsupported, UnsupportedOrder


@dataclass(frozen=True)
class Subalgebra:
    """Orthonormal basis (rows of ``coeffs``) of a subspace of two-forms in dimension ``n``."""

    n: int
    coeffs: np.ndarray  # (dim, m) coefficients in the canonical basis

    @property
    def dim(self):
        return self.coeffs.shape[0]

    @property
    def basis(self):
        return W.from_vec(self.coeffs) if self.dim else np.zeros((0, self.n, self.n))

    def closure_residual(self):
        """``max |Phat [h_i, h_j]|`` over basis pairs."""
        if self.dim == 0:
            return 0.0
        return W.subalgebra_projection_residual(self.coeffs.T @ self.coeffs)

    def contains(self, forms, rel=True):
        """Largest component of ``forms`` orthogonal to the subspace."""
        x = W.to_vec(np.asarray(forms)).reshape(-1, W.dim_wedge2(self.n))
        if len(x) == 0:
            return 0.0
        resid = x - (x @ self.coeffs.T) @ self.coeffs
        out = np.linalg.norm(resid, axis=1)
        if rel:
            out = out / max(1.0, float(np.max(np.linalg.norm(x, axis=1))))
        return float(np.max(out))


def _orth_rows(x, tol, atol):
    if x.shape[0] == 0:
        return x
    _, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[0] <= atol:
        return np.zeros((0, x.shape[1]))
    keep = s > max(tol * s[0], atol)
    return vt[keep]


def span(forms, n=None, tol=1e-8, atol=1e-10):
    """Orthonormal basis of the linear span of two-forms (no bracket closure)."""
    forms = np.asarray(forms, dtype=float)
    n = forms.shape[-1] if n is None else n
    x = W.to_vec(forms.reshape(-1, n, n))
    return Subalgebra(n, _orth_rows(x, tol, atol))


def generate_algebra(seeds, tol=1e-8, atol=1e-10, max_iter=50):
    """Smallest bracket-closed subspace containing ``span(seeds)``."""
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    seeds = np.asarray(seeds, dtype=float)
    if seeds.ndim < 3 or seeds.shape[-1] != seeds.shape[-2] or seeds.size == 0:
        raise InvalidInput("seeds must be a nonempty stack of n x n two-forms")
    n = seeds.shape[-1]
    if not W.is_antisymmetric(seeds, atol=1e-8 * max(1.0, np.abs(seeds).max())):
        raise InvalidInput("seeds must be antisymmetric")
    cst = W.structure_constants(n)
    v = span(seeds, n, tol, atol).coeffs
    for _ in range(max_iter):
        if v.shape[0] == 0:
            break
        br = np.einsum("ip,jq,pqr->ijr", v, v, cst).reshape(-1, v.shape[1])
        nv = _orth_rows(np.vstack([v, br]), tol, atol)
        if nv.shape[0] == v.shape[0]:
            break
        v = nv
    return Subalgebra(n, v)


def ambrose_singer_seeds(geom, p, kmax):
    """Two-forms ``nabla_X1 .. nabla_Xl Rm(p)(w)`` for basis directions and basis ``w``, ``l <= kmax``.

    ``geom`` must provide ``max_derivative_order`` and
    ``curvature_derivatives(kmax)`` returning ``[R, nabla R, ...]`` in frame
    components with the point axes leading; ``p`` indexes those axes.
    """
    if kmax < 0:
        raise InvalidInput("kmax must be non-negative")
    if kmax > geom.max_derivative_order:
        raise UnsupportedOrder(
            f"kmax={kmax} exceeds available derivative order {geom.max_derivative_order}"
        )
    n = geom.n
    out = []
    for D in geom.curvature_derivatives(kmax):
        d = np.asarray(D)[p] if p is not None else np.asarray(D)
        # Rm(e_a ^ e_b) = -R_ab.. ; the sign does not change the span.  Grid
        # curvature is antisymmetric in its last pair only to O(h^2).
        d = -d.reshape(-1, n, n)
        out.append(0.5 * (d - np.swapaxes(d, -1, -2)))
    return np.concatenate(out, axis=0)


@dataclass(frozen=True)
class ProjectionPair:
    """Complementary projections onto ``H`` and ``K = H^perp`` in endomorphism layout."""

    Pbar: np.ndarray
    Phat: np.ndarray

    @classmethod
    def from_flat(cls, pbar):
        m = pbar.shape[-1]
        return cls(W.from_matrix(pbar), W.from_matrix(np.eye(m) - pbar))

    @property
    def n(self):
        return self.Pbar.shape[-1]

    def invariant_residual(self):
        """Max violation among sum, idempotence, orthogonality and self-adjointness."""
        pb, ph = W.to_matrix(self.Pbar), W.to_matrix(self.Phat)
        eye = np.eye(pb.shape[-1])
        checks = [
            pb + ph - eye,
            pb @ pb - pb,
            ph @ ph - ph,
            pb @ ph,
            pb - np.swapaxes(pb, -1, -2),
            ph - np.swapaxes(ph, -1, -2),
        ]
        return max(float(np.max(np.abs(c), initial=0.0)) for c in checks)

    def ranks(self):
        pb, ph = W.to_matrix(self.Pbar), W.to_matrix(self.Phat)
        return (
            np.rint(np.trace(pb, axis1=-2, axis2=-1)).astype(int),
            np.rint(np.trace(ph, axis1=-2, axis2=-1)).astype(int),
        )


def projection_pair(H, tol=1e-10):
    if not isinstance(H, Subalgebra):
        raise InvalidInput("projection_pair expects a Subalgebra")
    c = H.coeffs
    if H.dim and np.max(np.abs(c @ c.T - np.eye(H.dim))) > tol:
        raise InvalidInput("subalgebra basis is not orthonormal")
    return ProjectionPair.from_flat(c.T @ c)


def subalgebra_from_pair(pair, tol=1e-6):
    """Image of ``Pbar`` (at a single point) as a Subalgebra."""
    pb = W.to_matrix(pair.Pbar)
    w, v = np.linalg.eigh(0.5 * (pb + pb.T))
    return Subalgebra(pair.n, v[:, w > 0.5].T)


def tvan_residuals(pair):
    """``max |T[Phat, Pbar, Pbar]|`` and its two slot permutations."""
    pb, ph = pair.Pbar, pair.Phat
    return (
        float(np.max(np.abs(W.trilinear_T(ph, pb, pb)))),
        float(np.max(np.abs(W.trilinear_T(pb, ph, pb)))),
        float(np.max(np.abs(W.trilinear_T(pb, pb, ph)))),
    )


def lambda_projection_residual(pair):
    """``max |Pbar_abcd Lambda^d_c Phat_ijkl|``."""
    lam = W.lambda_action(pair.Phat, 4)
    return float(np.max(np.abs(np.einsum("...abcd,...dcijkl->...abijkl", pair.Pbar, lam))))


# ---------------------------------------------------------------------------
# Representation on R^n


def commutant(H, tol=1e-8):
    """Basis of ``n x n`` matrices commuting with every element of ``H``."""
    n = H.n
    if H.dim == 0:
        return np.eye(n * n).reshape(n * n, n, n)
    eye = np.eye(n)
    # vec(X h - h X) = (h^T (x) I - I (x) h) vec(X) in row-major layout
    blocks = [np.kron(eye, h.T) - np.kron(h, eye) for h in H.basis]
    L = np.vstack(blocks)
    _, s, vt = np.linalg.svd(L)
    s_full = np.zeros(n * n)
    s_full[: len(s)] = s
    null = vt[s_full <= tol * max(s_full[0], 1.0)]
    return null.reshape(-1, n, n)


def _generic(basis_mats, seed):
    rng = np.random.default_rng(seed)
    return np.einsum("k,kij->ij", rng.standard_normal(len(basis_mats)), basis_mats)


def invariant_subspaces(H, tol=1e-6, seed=0):
    """Orthonormal bases (``n x d`` arrays) of the irreducible invariant blocks of ``H`` on ``R^n``."""
    comm = commutant(H)
    S = _generic(comm, seed)
    S = 0.5 * (S + S.T)
    w, v = np.linalg.eigh(S)
    scale = max(1.0, float(np.max(np.abs(w))))
    blocks, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol * scale:
            blocks.append(v[:, start:i])
            start = i
    return blocks


def detect_complex_structure(H, tol=1e-8, seed=0):
    """Orthogonal ``J`` with ``J^2 = -Id`` commuting with ``H``, or ``None``."""
    n = H.n
    if n % 2:
        raise Unsupported("complex structures need even dimension")
    comm = commutant(H)
    anti = comm - np.swapaxes(comm, -1, -2)
    flat = anti.reshape(len(anti), -1)
    if len(flat) == 0:
        return None
    _, s, vt = np.linalg.svd(flat, full_matrices=False)
    if s[0] < 1e-12:
        return None
    anti_basis = vt[s > 1e-8 * s[0]].reshape(-1, n, n)
    J0 = _generic(anti_basis, seed)
    u, _, wt = np.linalg.svd(J0)
    J = u @ wt
    J = 0.5 * (J - J.T)
    if np.linalg.norm(J @ J + np.eye(n)) < tol and np.linalg.norm(
        np.einsum("kij,jl->kil", H.basis, J) - np.einsum("ij,kjl->kil", J, H.basis)
    ) < max(tol, 1e-8):
        return J
    return None


BERGER_TRIVIAL = "trivial"
BERGER_UNRESOLVED = "reducible/symmetric-unresolved"


def berger_candidates(dim_hol, n):
    """Berger-list labels whose standard dimension equals ``dim_hol`` (advisory)."""
    if not 0 <= dim_hol <= W.dim_wedge2(n):
        raise InvalidInput("dim_hol out of range")
    if dim_hol == 0:
        return [BERGER_TRIVIAL]
    out = []
    if dim_hol == W.dim_wedge2(n):
        out.append(f"SO({n})")
    if n % 2 == 0 and n >= 4:
        m = n // 2
        if dim_hol == m * m:
            out.append(f"U({m})")
        if m >= 2 and dim_hol == m * m - 1:
            out.append(f"SU({m})")
    if n % 4 == 0:
        m = n // 4
        if m >= 2 and dim_hol == m * (2 * m + 1):
            out.append(f"Sp({m})")
        if m >= 2 and dim_hol == m * (2 * m + 1) + 3:
            out.append(f"Sp({m})*Sp(1)")
    if n == 7 and dim_hol == 14:
        out.append("G2")
    if n == 8 and dim_hol == 21:
        out.append("Spin(7)")
    return out or [BERGER_UNRESOLVED]


@dataclass
class HolonomyReport:
    dim: int
    bergerCandidates: list
    invariantSubspaces: list
    complexStructure: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "dim": int(self.dim),
            "bergerCandidates": list(self.bergerCandidates),
            "invariantSubspaces": [int(d) for d in self.invariantSubspaces],
            "complexStructure": None
            if self.complexStructure is None
            else (np.round(self.complexStructure, 12) + 0.0).tolist(),
        }
        out.update(self.extra)
        return out


def holonomy_report(H, tol=1e-6, seed=0):
    blocks = invariant_subspaces(H, tol=tol, seed=seed)
    J = None
    if H.n % 2 == 0:
        J = detect_complex_structure(H, seed=seed)
    return HolonomyReport(
        dim=H.dim,
        bergerCandidates=berger_candidates(H.dim, H.n),
        invariantSubspaces=sorted((b.shape[1] for b in blocks), reverse=True),
        complexStructure=J,
    )
